"""Network data model for N-gene cyclic feedback circuits.

Each gene i has mRNA r_i and protein p_i obeying

    dr_i/dt = -a_i r_i(t) + beta_i f_i(p_{i-1}(t - tau_p[i-1]))
    dp_i/dt =  c_i r_i(t - tau_r[i]) - b_i p_i(t)

with index 0 meaning N. Concentrations are normalized by the half-maximal
effective concentration, so the Hill threshold is 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "Regulation",
    "GeneStage",
    "Network",
    "DimensionlessParams",
    "HillNonlinearity",
    "ModelError",
    "HeterogeneousRatesError",
    "classify",
    "hill",
    "hill_derivative",
    "dimensionless",
]


class ModelError(ValueError):
    """Invalid network definition or out-of-domain argument."""


class HeterogeneousRatesError(ModelError):
    """Rates differ across stages where a homogeneous network is required."""


class Regulation(enum.Enum):
    ACTIVATION = "activation"
    REPRESSION = "repression"

    @property
    def sign(self) -> int:
        return 1 if self is Regulation.ACTIVATION else -1

    @classmethod
    def parse(cls, value: "str | Regulation") -> "Regulation":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"a": "activation", "act": "activation", "+": "activation",
                   "r": "repression", "rep": "repression", "-": "repression"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ModelError(f"unknown regulation {value!r}") from None


@dataclass(frozen=True)
class GeneStage:
    """Kinetics of one gene: rates in 1/min, delays in min."""

    a: float
    b: float
    c: float
    beta: float
    tau_r: float = 0.0
    tau_p: float = 0.0
    regulation: Regulation = Regulation.REPRESSION
    nu: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "regulation", Regulation.parse(self.regulation))
        for name in ("a", "b", "c", "beta", "tau_r", "tau_p", "nu"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ModelError(f"{name} must be finite, got {value!r}")
        for name in ("a", "b", "c", "beta"):
            if getattr(self, name) <= 0:
                raise ModelError(f"rate {name} must be > 0, got {getattr(self, name)!r}")
        for name in ("tau_r", "tau_p"):
            if getattr(self, name) < 0:
                raise ModelError(f"delay {name} must be >= 0, got {getattr(self, name)!r}")
        if self.nu <= 0:
            raise ModelError(f"Hill coefficient nu must be > 0, got {self.nu!r}")

    @property
    def delta(self) -> int:
        return self.regulation.sign

    @property
    def total_delay(self) -> float:
        return self.tau_r + self.tau_p

    @property
    def R_squared(self) -> float:
        """Production/degradation gain c*beta/(a*b) of this stage."""
        return self.c * self.beta / (self.a * self.b)

    @property
    def nonlinearity(self) -> "HillNonlinearity":
        return HillNonlinearity(self.nu, self.regulation)


@dataclass(frozen=True)
class Network:
    """Ordered ring of gene stages; stage i is regulated by protein i-1."""

    stages: tuple[GeneStage, ...] = field(default_factory=tuple)

    def __post_init__(self):
        stages = tuple(self.stages)
        if len(stages) < 1:
            raise ModelError("a network needs at least one gene")
        for s in stages:
            if not isinstance(s, GeneStage):
                raise ModelError(f"expected GeneStage, got {type(s).__name__}")
        object.__setattr__(self, "stages", stages)

    def __len__(self) -> int:
        return len(self.stages)

    def __getitem__(self, i: int) -> GeneStage:
        return self.stages[i]

    def __iter__(self):
        return iter(self.stages)

    @property
    def n_genes(self) -> int:
        return len(self.stages)

    @property
    def delta(self) -> int:
        return classify(self)

    @property
    def is_negative(self) -> bool:
        return self.delta < 0

    def array(self, name: str) -> np.ndarray:
        """Per-stage values of a GeneStage attribute as a float array."""
        return np.array([float(getattr(s, name)) for s in self.stages])

    @property
    def is_homogeneous(self) -> bool:
        """True when a, b, c and beta agree across all stages."""
        first = self.stages[0]
        return all(
            math.isclose(getattr(s, k), getattr(first, k), rel_tol=1e-12, abs_tol=0.0)
            for s in self.stages
            for k in ("a", "b", "c", "beta")
        )

    def with_stages(self, **changes) -> "Network":
        """Copy with the same field overrides applied to every stage."""
        return Network(tuple(replace(s, **changes) for s in self.stages))

    def rotated(self, k: int) -> "Network":
        k %= self.n_genes
        return Network(self.stages[k:] + self.stages[:k])

    @classmethod
    def homogeneous(
        cls,
        n_genes: int,
        *,
        a: float,
        b: float,
        c: float,
        beta: float,
        tau_r: float | Sequence[float] = 0.0,
        tau_p: float | Sequence[float] = 0.0,
        regulations: Sequence["Regulation | str"] | None = None,
        nu: float = 2.0,
    ) -> "Network":
        """Build a network with shared rates.

        Without ``regulations`` all genes are repressed, except that one
        activation is placed on gene 2 when ``n_genes`` is even so that the
        loop stays negative.
        """
        if n_genes < 1:
            raise ModelError("n_genes must be >= 1")
        if regulations is None:
            regulations = [Regulation.REPRESSION] * n_genes
            if n_genes % 2 == 0:
                regulations[1] = Regulation.ACTIVATION
        if len(regulations) != n_genes:
            raise ModelError("regulations length must equal n_genes")
        tr = np.broadcast_to(np.asarray(tau_r, dtype=float), (n_genes,))
        tp = np.broadcast_to(np.asarray(tau_p, dtype=float), (n_genes,))
        return cls(tuple(
            GeneStage(a, b, c, beta, float(tr[i]), float(tp[i]), Regulation.parse(regulations[i]), nu)
            for i in range(n_genes)
        ))


def classify(network: Network) -> int:
    """Sign of the loop: product of the per-stage regulation signs."""
    delta = 1
    for s in network.stages:
        delta *= s.delta
    return delta


@dataclass(frozen=True)
class HillNonlinearity:
    """Hill activation or repression with unit threshold."""

    nu: float
    regulation: Regulation = Regulation.REPRESSION

    def __post_init__(self):
        object.__setattr__(self, "regulation", Regulation.parse(self.regulation))
        if not self.nu > 0:
            raise ModelError(f"Hill coefficient nu must be > 0, got {self.nu!r}")

    @property
    def sign(self) -> int:
        return self.regulation.sign

    @property
    def defined_on_negatives(self) -> bool:
        # p**nu is real for negative p only when nu is an integer
        return float(self.nu).is_integer()

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        q = np.power(p, self.nu)
        if self.regulation is Regulation.REPRESSION:
            return 1.0 / (1.0 + q)
        return q / (1.0 + q)

    def derivative(self, p):
        p = np.asarray(p, dtype=float)
        q = np.power(p, self.nu)
        d = self.nu * np.power(p, self.nu - 1.0) / (1.0 + q) ** 2
        return -d if self.regulation is Regulation.REPRESSION else d


def hill(p: float, nu: float, regulation: "Regulation | str") -> float:
    """F_R(p) = 1/(1+p^nu) for repression, F_A(p) = p^nu/(1+p^nu) for activation."""
    if p < 0:
        raise ModelError(f"concentration must be >= 0, got {p!r}")
    return float(HillNonlinearity(nu, regulation)(p))


def hill_derivative(p: float, nu: float, regulation: "Regulation | str") -> float:
    if p < 0:
        raise ModelError(f"concentration must be >= 0, got {p!r}")
    return float(HillNonlinearity(nu, regulation).derivative(p))


@dataclass(frozen=True)
class DimensionlessParams:
    """Reduced parameter set of a homogeneous network.

    Times are in minutes; ``Q``, ``R`` and ``tau_tilde`` are dimensionless.
    """

    n_genes: int
    T_a: float
    T_b: float
    T_A: float
    T_G: float
    Q: float
    R: float
    tau: float
    tau_tilde: float

    @classmethod
    def from_rates(cls, n_genes: int, a: float, b: float, tau: float, R: float = 1.0):
        if a <= 0 or b <= 0:
            raise ModelError("degradation rates must be > 0")
        if tau < 0:
            raise ModelError("mean delay must be >= 0")
        T_a, T_b = 1.0 / a, 1.0 / b
        T_A = 0.5 * (T_a + T_b)
        T_G = math.sqrt(T_a * T_b)
        # AM-GM can be violated by one ulp when T_a == T_b
        Q = min(T_G / T_A, 1.0)
        return cls(n_genes, T_a, T_b, T_A, T_G, Q, R, tau, tau / T_A)

    @classmethod
    def normalized(cls, n_genes: int, Q: float, tau_tilde: float, R: float = 1.0):
        """Parameters in units where T_A = 1."""
        if not 0 < Q <= 1:
            raise ModelError(f"Q must lie in (0, 1], got {Q!r}")
        s = math.sqrt(max(0.0, 1.0 - Q * Q))
        T_a, T_b = 1.0 - s, 1.0 + s
        return cls(n_genes, T_a, T_b, 1.0, Q, Q, R, tau_tilde, tau_tilde)

    @property
    def R_i(self) -> float:
        return math.sqrt(self.R)


def dimensionless(network: Network) -> DimensionlessParams:
    """Reduce a homogeneous-rate network to (N, Q, R, tau, tau_tilde, ...)."""
    if not network.is_homogeneous:
        raise HeterogeneousRatesError(
            "rates a, b, c, beta differ across genes; use the heterogeneous frequency solver"
        )
    s0 = network.stages[0]
    tau = sum(s.total_delay for s in network.stages) / network.n_genes
    return DimensionlessParams.from_rates(network.n_genes, s0.a, s0.b, tau, s0.R_squared)
