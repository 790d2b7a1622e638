"""Harmonic-balance solutions for frequency, phase, bias and amplitude.

Frequency comes from the marginal-stability fixed point

    omega T_A = 1 / (sqrt(cot(theta)^2 + Q^2) + cot(theta)),  theta = pi/N - omega tau,

phases from the activation/repression pattern plus per-edge delay offsets,
and bias/amplitude from a 2-D closure search around the ring.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .describing import DescribingError, describe, describe_grid
from .model import DimensionlessParams, ModelError, Network, dimensionless
from .profile import OscillationProfile, wrap_pi

__all__ = [
    "BalanceError",
    "NoSolutionError",
    "ConvergenceError",
    "NoOscillatoryFixedPoint",
    "CycleGeometry",
    "ParameterIntervals",
    "BiasAmplitude",
    "OscillationProfile",
    "frequency_rhs",
    "solve_frequency",
    "solve_frequency_normalized",
    "solve_frequency_no_delay",
    "heterogeneous_phase_sum",
    "solve_frequency_heterogeneous",
    "frequency_bounds",
    "cycle_geometry",
    "phase_shifts",
    "solve_phases",
    "propagate",
    "closure_residual",
    "solve_bias_amplitude",
    "self_repression_period",
    "approx_period",
    "analyze",
    "Analysis",
]

log = logging.getLogger(__name__)

BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200


class BalanceError(ValueError):
    pass


class NoSolutionError(BalanceError):
    """The frequency equation has no root on the search bracket."""


class ConvergenceError(BalanceError):
    """The bias/amplitude search did not close the cycle."""

    def __init__(self, message: str, best_residual: float = math.inf, best_point=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best_point = best_point


class NoOscillatoryFixedPoint(ConvergenceError):
    pass


def _require_negative(network: Network) -> None:
    if not network.is_negative:
        raise ModelError(
            "monotone regime (delta > 0): trajectories converge to an equilibrium, no oscillation profile"
        )


def _cot_form(theta: float, Q: float) -> float:
    """1/(sqrt(cot^2 + Q^2) + cot), evaluated without cancellation."""
    c = math.cos(theta) / math.sin(theta)
    s = math.hypot(c, Q)
    if c >= 0:
        return 1.0 / (s + c)
    return (s - c) / (Q * Q)


def frequency_rhs(omega: float, params: DimensionlessParams) -> float:
    """Right-hand side of the frequency fixed point, in rad/min."""
    theta = math.pi / params.n_genes - omega * params.tau
    return _cot_form(theta, params.Q) / params.T_A


def _bisect_increasing(g, lo: float, hi: float, tol: float) -> float:
    # g(lo) < 0 < g(hi) is assumed
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def solve_frequency_normalized(n_genes: int, Q: float, tau_tilde: float) -> float:
    """Normalized frequency omega*T_A for given (N, Q, tau_tilde)."""
    if tau_tilde < 0:
        raise BalanceError("tau_tilde must be >= 0")
    if tau_tilde == 0:
        return solve_frequency_no_delay(DimensionlessParams.normalized(n_genes, Q, 0.0))
    params = DimensionlessParams.normalized(n_genes, Q, tau_tilde)
    return solve_frequency(params)


def solve_frequency(params: DimensionlessParams) -> float:
    """Minimum positive solution of the delayed frequency fixed point (rad/min).

    The residual omega - rhs(omega) increases monotonically on
    [0, pi/(N tau)), where the root is bracketed.
    """
    if params.tau == 0:
        return solve_frequency_no_delay(params)
    if params.n_genes < 1:
        raise BalanceError("n_genes must be >= 1")
    hi = math.pi / (params.n_genes * params.tau) * (1 - 1e-12)

    def g(w):
        return w - frequency_rhs(w, params)

    if not g(hi) > 0:
        raise NoSolutionError("frequency residual has no sign change on [0, pi/(N tau)]")
    return _bisect_increasing(g, 0.0, hi, BISECT_TOL / params.T_A)


def solve_frequency_no_delay(params: DimensionlessParams) -> float:
    """Closed-form frequency without delays; needs N >= 2."""
    if params.n_genes < 2:
        raise BalanceError("a single gene without delay has no oscillatory solution (cot(pi) diverges)")
    return _cot_form(math.pi / params.n_genes, params.Q) / params.T_A


def heterogeneous_phase_sum(omega: float, a, b, tau_r, tau_p) -> float:
    """Sum over genes of the phase of h_i(j omega); the loop closes at -pi.

    The delay entering gene i is tau_r[i] + tau_p[i-1].
    """
    a, b, tau_r, tau_p = (np.asarray(v, dtype=float) for v in (a, b, tau_r, tau_p))
    edge = tau_r + np.roll(tau_p, 1)
    return float(np.sum(-omega * edge - np.arctan(omega / a) - np.arctan(omega / b)))


def _heterogeneous_root(a, b, tau_r, tau_p) -> float:
    a, b, tau_r, tau_p = (np.asarray(v, dtype=float) for v in (a, b, tau_r, tau_p))
    n = a.size

    def g(w):
        # decreasing in w; negated for the increasing bisection helper
        return -(heterogeneous_phase_sum(w, a, b, tau_r, tau_p) + math.pi)

    total = float(np.sum(tau_r + tau_p))
    if total > 0:
        hi = math.pi / total
    else:
        if n < 2:
            raise NoSolutionError("a single gene without delay never reaches a loop phase of -pi")
        hi = float(max(a.max(), b.max()))
        while g(hi) <= 0:
            hi *= 2
            if hi > 1e12:
                raise NoSolutionError("phase condition not met on any finite frequency")
    T_scale = 0.5 * (1 / a.mean() + 1 / b.mean())
    return _bisect_increasing(g, 0.0, hi, BISECT_TOL / T_scale)


def solve_frequency_heterogeneous(network: Network) -> float:
    """Frequency of a network with arbitrary per-gene rates and delays.

    Independent of the synthesis rates c_i and beta_i.
    """
    _require_negative(network)
    return _heterogeneous_root(
        network.array("a"), network.array("b"), network.array("tau_r"), network.array("tau_p")
    )


@dataclass(frozen=True)
class ParameterIntervals:
    """Per-gene closed intervals for a, b, c and beta (arrays of length N)."""

    a_lo: np.ndarray
    a_hi: np.ndarray
    b_lo: np.ndarray
    b_hi: np.ndarray
    c_lo: np.ndarray
    c_hi: np.ndarray
    beta_lo: np.ndarray
    beta_hi: np.ndarray

    def __post_init__(self):
        n = None
        for name in self.__dataclass_fields__:
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, v)
            if n is None:
                n = v.size
            if v.size != n:
                raise ValueError("all interval arrays must have the same length")
            if np.any(v <= 0):
                raise ValueError(f"interval bounds must be > 0 ({name})")
        for p in ("a", "b", "c", "beta"):
            if np.any(getattr(self, p + "_lo") > getattr(self, p + "_hi")):
                raise ValueError(f"lower bound exceeds upper bound for {p}")

    @property
    def n_genes(self) -> int:
        return self.a_lo.size

    @classmethod
    def around(cls, network: Network, rel: float = 0.1, *, rates: Sequence[str] = ("a", "b", "c", "beta")):
        """Intervals of +-rel around the network's nominal values for the named rates."""
        kw = {}
        for p in ("a", "b", "c", "beta"):
            v = network.array(p)
            w = rel if p in rates else 0.0
            kw[p + "_lo"], kw[p + "_hi"] = v * (1 - w), v * (1 + w)
        return cls(**kw)

    def sample(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        return {p: rng.uniform(getattr(self, p + "_lo"), getattr(self, p + "_hi"))
                for p in ("a", "b", "c", "beta")}


def frequency_bounds(intervals: ParameterIntervals, tau_r, tau_p, n_genes: int | None = None):
    """(omega_low, omega_high) over the parameter box.

    The frequency grows with every a_i and b_i and ignores c_i, beta_i, so
    the extremes sit at the lower and upper corners.
    """
    tau_r = np.broadcast_to(np.asarray(tau_r, dtype=float), (intervals.n_genes,))
    tau_p = np.broadcast_to(np.asarray(tau_p, dtype=float), (intervals.n_genes,))
    if n_genes is not None and n_genes != intervals.n_genes:
        raise ValueError("n_genes disagrees with the interval arrays")
    lo = _heterogeneous_root(intervals.a_lo, intervals.b_lo, tau_r, tau_p)
    hi = _heterogeneous_root(intervals.a_hi, intervals.b_hi, tau_r, tau_p)
    return lo, hi


@dataclass(frozen=True)
class CycleGeometry:
    """Per-edge data of the ring: edge i runs from protein i to gene i+1.

    Z[i] is 1 when gene i+1 is repressed; delta_tau[i] is the delay of edge i
    minus the mean delay.
    """

    Z: np.ndarray
    delta_tau: np.ndarray


def cycle_geometry(network: Network) -> CycleGeometry:
    tau_r = network.array("tau_r")
    tau_p = network.array("tau_p")
    tau = float(np.sum(tau_r + tau_p)) / network.n_genes
    nxt = np.roll(np.arange(network.n_genes), -1)
    Z = np.array([1 if network.stages[j].delta < 0 else 0 for j in nxt])
    delta_tau = tau_r[nxt] + tau_p - tau
    return CycleGeometry(Z, delta_tau)


def phase_shifts(network: Network, omega: float) -> np.ndarray:
    """Unwrapped phi_{i+1} - phi_i in radians, for i = 1..N (last edge closes the ring)."""
    if not omega > 0:
        raise BalanceError("omega must be > 0")
    geo = cycle_geometry(network)
    n = network.n_genes
    return (geo.Z - 1.0 / n) * math.pi - omega * geo.delta_tau


def solve_phases(network: Network, omega: float) -> np.ndarray:
    """Phases phi_i in (-pi, pi] with phi_1 = 0."""
    if network.n_genes == 1:
        return np.zeros(1)
    shifts = phase_shifts(network, omega)
    phases = np.concatenate([[0.0], np.cumsum(shifts[:-1])])
    return np.atleast_1d(wrap_pi(phases))


def _loop_gain_moduli(network: Network, omega: float) -> np.ndarray:
    # |phi_i(j omega)| = |(j omega/a_i + 1)(j omega/b_i + 1)|
    a, b = network.array("a"), network.array("b")
    return np.sqrt((1 + (omega / a) ** 2) * (1 + (omega / b) ** 2))


def propagate(network: Network, omega: float, x1: float, y1: float):
    """Carry (x, y) once around the ring; returns arrays of length N + 1.

    Entry i is gene i+1 (0-based); the last entry is gene 1 again.
    """
    n = network.n_genes
    mod = _loop_gain_moduli(network, omega)
    x = np.empty(n + 1)
    y = np.empty(n + 1)
    x[0], y[0] = x1, y1
    for i in range(n):
        nxt = (i + 1) % n
        st = network.stages[nxt]
        pair = describe(st.nonlinearity, st.R_squared, x[i], y[i])
        x[i + 1] = pair.eta * x[i]
        y[i + 1] = abs(pair.xi) * y[i] / mod[nxt]
    return x, y


def closure_residual(network: Network, omega: float, x1: float, y1: float) -> np.ndarray:
    x, y = propagate(network, omega, x1, y1)
    return np.array([x[-1] / x1 - 1.0, y[-1] / y1 - 1.0])


def _grid_scores(network: Network, omega: float, xs: np.ndarray, fracs: np.ndarray) -> np.ndarray:
    n = network.n_genes
    mod = _loop_gain_moduli(network, omega)
    X0, F = np.meshgrid(xs, fracs, indexing="ij")
    x, y = X0.copy(), X0 * F
    for i in range(n):
        nxt = (i + 1) % n
        st = network.stages[nxt]
        eta, xi = describe_grid(st.nonlinearity, st.R_squared, x, y)
        x, y = eta * x, np.abs(xi) * y / mod[nxt]
    score = np.hypot(x / X0 - 1, y / (X0 * F) - 1)
    return np.where(np.isfinite(score), score, np.inf)


@dataclass(frozen=True)
class BiasAmplitude:
    biases: np.ndarray
    amplitudes: np.ndarray
    residual: float
    method: str


def _newton(fun, z0, *, tol: float, max_iter: int = 50, rel_step: float = 1e-6):
    """Damped Newton on a 2-D residual with forward-difference Jacobian."""
    z = np.asarray(z0, dtype=float)
    r = fun(z)
    nr = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if nr <= tol:
            break
        J = np.empty((2, 2))
        for k in range(2):
            dz = rel_step * max(1.0, abs(z[k]))
            zp = z.copy()
            zp[k] += dz
            J[:, k] = (fun(zp) - r) / dz
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return z, nr, False
        lam = 1.0
        while lam > 1e-6:
            zn = z + lam * step
            rn = fun(zn)
            nrn = float(np.linalg.norm(rn))
            if np.isfinite(nrn) and nrn < nr:
                break
            lam *= 0.5
        else:
            return z, nr, False
        z, r, nr = zn, rn, nrn
    return z, nr, nr <= tol


def solve_bias_amplitude(
    network: Network,
    omega: float,
    *,
    tol: float = 1e-10,
    accept: float = 1e-6,
    grid: int = 64,
) -> BiasAmplitude:
    """Bias and amplitude vectors closing the describing-function ring.

    Staged search: log grid over (x_1, y_1/x_1), damped Newton from the best
    cell, Nelder-Mead if Newton stalls. Unknowns are solved in log space to
    keep them positive.
    """
    _require_negative(network)
    R = math.sqrt(network.stages[0].R_squared)
    xs = np.geomspace(1e-2 * R, 1e2 * R, grid)
    fracs = np.arange(1, grid + 1) / grid
    scores = _grid_scores(network, omega, xs, fracs)
    i, j = np.unravel_index(np.argmin(scores), scores.shape)
    if not np.isfinite(scores[i, j]):
        raise ConvergenceError("no admissible starting cell on the search grid")
    z0 = np.log([xs[i], xs[i] * fracs[j]])

    def fun(z):
        x1, y1 = np.exp(z)
        try:
            return closure_residual(network, omega, x1, y1)
        except (DescribingError, FloatingPointError):
            return np.array([np.inf, np.inf])

    z, nr, ok = _newton(fun, z0, tol=tol)
    method = "newton"
    if not ok:
        log.info("Newton stalled at residual %.3g; falling back to Nelder-Mead", nr)
        res = minimize(lambda zz: float(np.linalg.norm(fun(zz))), z, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        z2, nr2, ok = _newton(fun, res.x, tol=tol)
        if nr2 < nr:
            z, nr = z2, nr2
        method = "nelder-mead"
    x1, y1 = np.exp(z)
    if y1 < 1e-8 * x1:
        raise NoOscillatoryFixedPoint("no oscillatory fixed point found (amplitude collapsed to 0)",
                                      nr, (x1, y1))
    if not nr <= accept:
        raise ConvergenceError(f"bias/amplitude search did not converge (best residual {nr:.3g})",
                               nr, (x1, y1))
    x, y = propagate(network, omega, x1, y1)
    return BiasAmplitude(x[:-1], y[:-1], nr, method)


def self_repression_period(tau_r: float, tau_p: float, a: float, b: float) -> float:
    """Self-repression period estimate 2(tau_r + tau_p + ln2/a + ln2/b), in minutes."""
    return 2.0 * (tau_r + tau_p + math.log(2) / a + math.log(2) / b)


def approx_period(params: DimensionlessParams) -> float:
    """Large-delay normalized period 4N + 2N tau_tilde (units of T_A)."""
    n = params.n_genes
    return 4.0 * n + 2.0 * n * params.tau_tilde


@dataclass(frozen=True)
class Analysis:
    """Everything the analytic path predicts for one network."""

    network: Network
    params: DimensionlessParams | None
    omega: float
    profile: OscillationProfile
    phase_shifts: np.ndarray
    bias_amplitude: BiasAmplitude | None
    bias_amplitude_error: str | None
    self_repression: float | None
    approx_period_min: float | None

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega


def analyze(network: Network, *, with_amplitude: bool = True) -> Analysis:
    """Frequency, phases and (optionally) bias/amplitude for a negative ring."""
    _require_negative(network)
    params = dimensionless(network) if network.is_homogeneous else None
    omega = solve_frequency(params) if params is not None else solve_frequency_heterogeneous(network)
    phases = solve_phases(network, omega)
    ba, err = None, None
    if with_amplitude:
        try:
            ba = solve_bias_amplitude(network, omega)
        except ConvergenceError as exc:
            err = str(exc)
    profile = OscillationProfile(
        omega, phases, None if ba is None else ba.biases, None if ba is None else ba.amplitudes
    )
    self_repression = None
    if network.n_genes == 1:
        s = network.stages[0]
        self_repression = self_repression_period(s.tau_r, s.tau_p, s.a, s.b)
    approx = approx_period(params) * params.T_A if params is not None else None
    return Analysis(network, params, omega, profile, phase_shifts(network, omega), ba, err, self_repression, approx)
