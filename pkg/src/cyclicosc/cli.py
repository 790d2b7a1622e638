"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 analysis precondition
failure, 3 tolerance/verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys

import numpy as np

from . import __version__
from .balance import BalanceError, analyze
from .dde_sim import NoOscillationError, NotSettledError, SimConfig, SimulationError, default_config, simulate_profile
from .describing import describe_grid
from .model import HillNonlinearity, ModelError, Network
from .netfile import NetworkFileError, bundled_names, load_network
from .profile import wrap_deg360
from .spectral import (
    Region,
    balance_residuals,
    marginal_stability_check,
    circulant_transform,
    cyc,
    delay_matrix,
    eigen_K0,
    eigenvalues_K1,
    gain_matrices,
    set_distance,
)
from .sweep import SWEEP_COLUMNS, SWEEP_PARAMS, compare, sweep

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_TOLERANCE = 0, 1, 2, 3

REPORT_COLUMNS = ("quantity", "gene", "value")
DESCRIBE_COLUMNS = ("x", "y", "eta", "xi")


class _Report:
    """Accumulates (quantity, gene, value) rows for CSV or table output."""

    def __init__(self):
        self.rows: list[tuple[str, str, object]] = []

    def add(self, quantity, value, gene=""):
        self.rows.append((quantity, str(gene), value))

    def add_vector(self, quantity, values, start=1):
        for i, v in enumerate(values, start=start):
            self.add(quantity, v, i)

    def write(self, fmt: str, out) -> None:
        if fmt == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for q, g, v in self.rows:
                w.writerow((q, g, _full(v)))
            return
        width = max((len(q) for q, _, _ in self.rows), default=8)
        for q, g, v in self.rows:
            label = f"{q}[{g}]" if g else q
            out.write(f"{label:<{width + 4}} {_short(v)}\n")


def _full(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _short(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.4g}"
    return str(v)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _load(args) -> Network:
    network, _ = load_network(args.config)
    return network


def _sim_config(args, network: Network) -> SimConfig:
    cfg = default_config(network, step=args.step)
    kw = dict(step=cfg.step, t_end=cfg.t_end, output_interval=cfg.output_interval,
              transient_fraction=args.transient)
    if args.t_end is not None:
        kw["t_end"] = args.t_end
    return SimConfig(**kw)


def cmd_analyze(args) -> int:
    network = _load(args)
    an = analyze(network)
    rep = _Report()
    rep.add("omega_rad_per_min", an.omega)
    rep.add("period_min", an.period)
    if an.params is not None:
        p = an.params
        for name in ("n_genes", "Q", "R", "tau", "tau_tilde", "T_a", "T_b", "T_A", "T_G"):
            rep.add(name, getattr(p, name))
        rep.add("normalized_omega", an.omega * p.T_A)
    rep.add_vector("phase_deg", an.profile.phases_deg)
    rep.add_vector("phase_shift_deg", np.degrees(an.phase_shifts))
    rep.add_vector("phase_shift_wrapped_deg", wrap_deg360(an.phase_shifts))
    if an.bias_amplitude is not None:
        rep.add_vector("bias", an.bias_amplitude.biases)
        rep.add_vector("amplitude", an.bias_amplitude.amplitudes)
        rep.add("closure_residual", an.bias_amplitude.residual)
    else:
        rep.add("bias_amplitude_status", an.bias_amplitude_error or "skipped")
    if an.self_repression is not None:
        rep.add("period_self_repression_min", an.self_repression)
    if an.approx_period_min is not None:
        rep.add("period_linear_approx_min", an.approx_period_min)
    out, close = _open_out(args.out)
    try:
        rep.write(args.format, out)
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_simulate(args) -> int:
    network = _load(args)
    cfg = _sim_config(args, network)
    series, prof, diag = simulate_profile(network, cfg)
    if args.out in (None, "-"):
        series.to_csv(sys.stdout)
        summary = sys.stderr
    else:
        series.to_csv(args.out)
        summary = sys.stdout
    rep = _Report()
    rep.add("omega_rad_per_min", prof.omega)
    rep.add("period_min", prof.period)
    rep.add("crossing_omega_rad_per_min", diag.crossing_omega)
    rep.add("cycles_analysed", diag.n_cycles)
    rep.add("period_drift", diag.period_drift)
    rep.add_vector("phase_deg", prof.phases_deg)
    rep.add_vector("bias", prof.biases)
    rep.add_vector("amplitude", prof.amplitudes)
    rep.add_vector("distortion", diag.distortion)
    rep.write(args.format, summary)
    return EXIT_OK


def cmd_compare(args) -> int:
    network = _load(args)
    cfg = _sim_config(args, network)
    report = compare(network, cfg)
    rep = _Report()
    an = report.analysis
    rep.add("omega_predicted", report.predicted.omega)
    rep.add("period_predicted_min", an.period)
    if report.simulated is None:
        rep.add("simulation_status", report.failure)
    else:
        rep.add("omega_simulated", report.simulated.omega)
        rep.add("period_simulated_min", report.simulated.period)
        rep.add("frequency_error_pct", report.frequency_error_pct)
        rep.add_vector("phase_predicted_deg", report.predicted.phases_deg)
        rep.add_vector("phase_simulated_deg", report.simulated.phases_deg)
        rep.add_vector("phase_error_deg", report.phase_error_deg)
        if report.amplitude_error_pct is not None:
            rep.add_vector("bias_predicted", report.predicted.biases)
            rep.add_vector("bias_simulated", report.simulated.biases)
            rep.add_vector("amplitude_predicted", report.predicted.amplitudes)
            rep.add_vector("amplitude_simulated", report.simulated.amplitudes)
            rep.add_vector("amplitude_error_pct", report.amplitude_error_pct)
        rep.add_vector("distortion", report.distortion)
    if an.self_repression is not None:
        rep.add("period_self_repression_min", an.self_repression)
    if an.approx_period_min is not None:
        rep.add("period_linear_approx_min", an.approx_period_min)
    ok = report.within(args.freq_tol, args.phase_tol)
    rep.add("within_tolerance", ok)
    out, close = _open_out(args.out)
    try:
        rep.write(args.format, out)
    finally:
        if close:
            out.close()
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_sweep(args) -> int:
    network = _load(args)
    values = np.linspace(args.start, args.stop, args.steps)
    rows = sweep(network, args.param, values, args.mode, jobs=args.jobs)
    out, close = _open_out(args.out)
    try:
        if args.format == "csv":
            w = csv.DictWriter(out, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _full(v) for k, v in r.items()})
        else:
            cols = [c for c in SWEEP_COLUMNS if any(r[c] != "" for r in rows)]
            out.write("  ".join(f"{c:>12}" for c in cols) + "\n")
            for r in rows:
                out.write("  ".join(f"{_short(r[c]):>12}" for c in cols) + "\n")
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_describe(args) -> int:
    nu, reg, r2 = args.nu, args.regulation, args.r2
    if args.config:
        st = _load(args).stages[args.gene - 1]
        nu = st.nu if nu is None else nu
        reg = st.regulation.value if reg is None else reg
        r2 = st.R_squared if r2 is None else r2
    f = HillNonlinearity(2.0 if nu is None else nu, reg or "repression")
    r2 = 1.0 if r2 is None else r2
    xs = np.linspace(args.x_range[0], args.x_range[1], args.steps)
    ys = np.linspace(args.y_range[0], args.y_range[1], args.steps)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    eta, xi = describe_grid(f, r2, X, Y, panels=4096)
    out, close = _open_out(args.out)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(DESCRIBE_COLUMNS)
        for row in zip(X.ravel(), Y.ravel(), eta.ravel(), xi.ravel()):
            w.writerow([repr(float(v)) for v in row])
    finally:
        if close:
            out.close()
    return EXIT_OK


def verify_network(network: Network, tol: float = 1e-6) -> list[tuple[str, bool, float]]:
    """(name, passed, value) for the harmonic-balance consistency checks."""
    an = analyze(network)
    results = []
    if an.bias_amplitude is None:
        results.append(("bias/amplitude solver converged", False, math.inf))
        return results
    prof = an.profile
    results.append(("closure residual", an.bias_amplitude.residual <= tol, an.bias_amplitude.residual))
    res = balance_residuals(network, prof)
    results.append(("closed-loop bias residual", res.bias <= tol, res.bias))
    results.append(("closed-loop harmonic residual", res.harmonic <= tol, res.harmonic))
    mats = gain_matrices(network, prof.omega, prof.biases, prof.amplitudes)
    eta_prod = float(np.prod(mats.eta))
    results.append(("product of bias gains = 1", abs(eta_prod - 1) <= tol, abs(eta_prod - 1)))
    tr, tp = network.array("tau_r"), network.array("tau_p")
    lam = eigenvalues_K1(mats.xi)
    dense = np.linalg.eigvals(delay_matrix(prof.omega, tr, tp) @ cyc(mats.xi))
    d = set_distance(lam, dense)
    results.append(("U K1 eigenvalues vs dense solve", d <= 1e-9 * max(1, abs(lam[0])), d))
    mus, v = eigen_K0(mats.eta)
    d0 = set_distance(mus, np.linalg.eigvals(mats.K0))
    results.append(("K0 eigenvalues vs dense solve", d0 <= 1e-9 * max(1, abs(mus[0])), d0))
    ev = float(np.max(np.abs(mats.K0 @ v - mus[0] * v)))
    results.append(("K0 eigenvector for mu_1", ev <= 1e-9, ev))
    ct = circulant_transform(mats.xi, prof.omega, tr, tp)
    results.append(("circulant similarity", ct.similarity_error <= 1e-9, ct.similarity_error))
    rep = marginal_stability_check(network, prof)
    for k, c in enumerate(rep.checks, start=1):
        results.append((f"eigenvalue {k} of U K1: {c.region.value}", True, float("nan") if c.boundary_gain is None else c.boundary_gain))
    results.append(("marginal stability (conjugate pair on boundary, rest inside)", rep.ok, float(len(rep.boundary_indices))))
    return results


def cmd_verify(args) -> int:
    network = _load(args)
    results = verify_network(network, args.tol)
    out, close = _open_out(args.out)
    try:
        if args.format == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(("check", "passed", "value"))
            for name, ok, val in results:
                w.writerow((name, ok, repr(float(val))))
        else:
            for name, ok, val in results:
                out.write(f"{'PASS' if ok else 'FAIL'}  {name:<55} {val:.3e}\n")
    finally:
        if close:
            out.close()
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclicosc",
        description="Harmonic-balance profiles of cyclic gene networks, cross-checked by DDE simulation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help=f"network file, or a bundled name ({', '.join(bundled_names())})")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "table"), default="table")

    def sim_flags(p):
        p.add_argument("--step", type=float, default=None, help="integration step in min")
        p.add_argument("--t-end", type=float, default=None, help="horizon in min")
        p.add_argument("--transient", type=float, default=0.5, help="fraction of horizon discarded")

    p = sub.add_parser("analyze", help="predict frequency, phases, bias and amplitude")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="integrate the delayed model; CSV time series + fitted profile")
    common(p)
    sim_flags(p)
    p.set_defaults(func=cmd_simulate, format="table")

    p = sub.add_parser("compare", help="prediction against simulation")
    common(p)
    sim_flags(p)
    p.add_argument("--freq-tol", type=float, default=10.0, help="allowed |frequency error| in %%")
    p.add_argument("--phase-tol", type=float, default=10.0, help="allowed |phase error| in degrees")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser(
        "sweep", help="one-parameter sweep",
        description="Sweep tau (mean delay, min), tau_tilde, Q, N, a or b. The N axis replicates "
                    "gene 1: all repressions for odd N, gene 2 activated for even N.",
    )
    common(p)
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--mode", choices=("analytic", "simulated", "both"), default="analytic")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("describe", help="CSV grid of describing-function gains (x, y, eta, xi)")
    common(p, config_required=False)
    p.add_argument("--gene", type=int, default=1)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--regulation", choices=("activation", "repression"), default=None)
    p.add_argument("--r2", type=float, default=None, help="gain R^2 = c beta/(a b)")
    p.add_argument("--x-range", type=float, nargs=2, default=(0.5, 5.0))
    p.add_argument("--y-range", type=float, nargs=2, default=(0.0, 0.5))
    p.add_argument("--steps", type=int, default=10)
    p.set_defaults(func=cmd_describe, format="csv")

    p = sub.add_parser("verify", help="harmonic-balance consistency checks on the solved profile")
    common(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NetworkFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoOscillationError, NotSettledError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (ModelError, BalanceError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
