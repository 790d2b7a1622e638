"""Plain-text network definition files.

Format::

    # comments start with '#'
    name = pentilator            # optional header keys before the first block

    [defaults]                   # optional; applies to every gene
    a = 2.0
    b = 0.2

    [gene 1]
    c = 0.3
    beta = 10
    tau_r = 1.8
    tau_p = 1.0
    nu = 2
    regulation = repression      # or activation

Genes are taken in file order. Every gene must end up with a, b, c, beta,
tau_r, tau_p, nu and regulation, either directly or from ``[defaults]``.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from .model import GeneStage, ModelError, Network, Regulation

__all__ = ["NetworkFileError", "parse_network", "load_network", "dumps_network", "bundled_names", "FIELDS"]

FIELDS = ("a", "b", "c", "beta", "tau_r", "tau_p", "nu", "regulation")
_NUMERIC = FIELDS[:-1]
_HEADER = re.compile(r"^\[\s*(defaults|gene(?:\s+\S+)?)\s*\]$", re.IGNORECASE)


class NetworkFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None, source: str = "<string>"):
        where = source if line is None else f"{source}:{line}"
        if field:
            where += f" [{field}]"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.field = field


def _value(field: str, raw: str, line: int, source: str):
    if field == "regulation":
        try:
            return Regulation.parse(raw)
        except ModelError as exc:
            raise NetworkFileError(str(exc), line, field, source) from None
    try:
        return float(raw)
    except ValueError:
        raise NetworkFileError(f"not a number: {raw!r}", line, field, source) from None


def parse_network(text: str, source: str = "<string>") -> tuple[Network, dict[str, str]]:
    """Parse a network document; returns the network and its header metadata."""
    meta: dict[str, str] = {}
    defaults: dict[str, tuple[object, int]] = {}
    genes: list[tuple[int, dict[str, tuple[object, int]]]] = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            if m.group(1).lower() == "defaults":
                if genes:
                    raise NetworkFileError("[defaults] must precede the gene blocks", lineno, source=source)
                current = defaults
            else:
                current = {}
                genes.append((lineno, current))
            continue
        if line.startswith("["):
            raise NetworkFileError(f"unknown block header {line!r}", lineno, source=source)
        if "=" not in line:
            raise NetworkFileError("expected 'key = value'", lineno, source=source)
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if current is None:
            meta[key] = val
            continue
        if key not in FIELDS:
            raise NetworkFileError(f"unknown field {key!r}", lineno, key, source)
        if key in current:
            raise NetworkFileError("duplicate field", lineno, key, source)
        current[key] = (_value(key, val, lineno, source), lineno)
    if not genes:
        raise NetworkFileError("no [gene] blocks found", source=source)
    stages = []
    for header_line, block in genes:
        merged = {**defaults, **block}
        missing = [f for f in FIELDS if f not in merged]
        if missing:
            raise NetworkFileError(f"missing field(s) {', '.join(missing)}", header_line, missing[0], source)
        try:
            stages.append(GeneStage(**{k: v for k, (v, _) in merged.items()}))
        except ModelError as exc:
            bad = next((f for f in FIELDS if f in str(exc).split()), None)
            line = merged[bad][1] if bad in merged else header_line
            raise NetworkFileError(str(exc), line, bad, source) from None
    return Network(tuple(stages)), meta


def bundled_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("cyclicosc.data").iterdir() if p.name.endswith(".net"))


def load_network(path_or_name: str | Path) -> tuple[Network, dict[str, str]]:
    """Load a file path, or a bundled example by name (e.g. ``pentilator``)."""
    p = Path(path_or_name)
    if p.exists():
        return parse_network(p.read_text(), str(p))
    name = str(path_or_name)
    if name in bundled_names():
        res = resources.files("cyclicosc.data") / f"{name}.net"
        return parse_network(res.read_text(), f"<bundled {name}>")
    raise NetworkFileError(f"no such file or bundled network: {name!r}")


def dumps_network(network: Network, meta: dict[str, str] | None = None) -> str:
    """Serialise with full float precision so the text re-parses identically."""
    out = [f"{k} = {v}" for k, v in (meta or {}).items()]
    for i, st in enumerate(network.stages, start=1):
        if out:
            out.append("")
        out.append(f"[gene {i}]")
        for f in _NUMERIC:
            out.append(f"{f} = {float(getattr(st, f))!r}")
        out.append(f"regulation = {st.regulation.value}")
    return "\n".join(out) + "\n"
