"""Quasi-linear gain matrices of the ring and their eigen-structure.

``cyc(z_1..z_N)`` places z_1 at (1, N) and z_i at (i, i-1); U K1 has
eigenvalues on a circle at odd multiples of pi/N whatever the delays, and K0
at even multiples. The marginal-stability test compares an eigenvalue with
the boundary curve phi(j w) e^{j w tau}, phi(s) = (T_a s + 1)(T_b s + 1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .describing import describe
from .model import Network

__all__ = [
    "cyc",
    "CyclicGainMatrices",
    "LoopTransfer",
    "Region",
    "RegionCheck",
    "SpectralError",
    "delay_matrix",
    "gain_matrices",
    "eigenvalues_K1",
    "eigen_K0",
    "circulant_transform",
    "CirculantTransform",
    "stability_region_check",
    "BalanceResiduals",
    "balance_residuals",
    "MarginalStabilityReport",
    "marginal_stability_check",
    "set_distance",
]


class SpectralError(ValueError):
    pass


def cyc(z) -> np.ndarray:
    z = np.asarray(z)
    n = z.size
    M = np.zeros((n, n), dtype=z.dtype if np.iscomplexobj(z) else float)
    for i in range(n):
        M[i, (i - 1) % n] += z[i]
    return M


def delay_matrix(omega: float, tau_r, tau_p) -> np.ndarray:
    """U = diag(exp(j omega (tau - tau_i))) with tau_i = tau_r[i] + tau_p[i]."""
    tau_i = np.asarray(tau_r, dtype=float) + np.asarray(tau_p, dtype=float)
    tau = tau_i.mean()
    return np.diag(np.exp(1j * omega * (tau - tau_i)))


@dataclass(frozen=True)
class CyclicGainMatrices:
    K0: np.ndarray
    K1: np.ndarray
    U: np.ndarray
    eta: np.ndarray
    xi: np.ndarray


def gain_matrices(network: Network, omega: float, biases, amplitudes) -> CyclicGainMatrices:
    """K0 = cyc(eta), K1 = cyc(xi) evaluated at the given profile, plus U."""
    n = network.n_genes
    eta = np.empty(n)
    xi = np.empty(n)
    for i, st in enumerate(network.stages):
        pair = describe(st.nonlinearity, st.R_squared, biases[i - 1], amplitudes[i - 1])
        eta[i], xi[i] = pair.eta, pair.xi
    U = delay_matrix(omega, network.array("tau_r"), network.array("tau_p"))
    return CyclicGainMatrices(cyc(eta), cyc(xi), U, eta, xi)


@dataclass(frozen=True)
class LoopTransfer:
    T_a: float
    T_b: float
    tau: float

    @classmethod
    def from_network(cls, network: Network) -> "LoopTransfer":
        s = network.stages[0]
        tau = float(np.sum(network.array("tau_r") + network.array("tau_p"))) / network.n_genes
        return cls(1.0 / s.a, 1.0 / s.b, tau)

    def phi(self, s):
        return (self.T_a * s + 1) * (self.T_b * s + 1)

    def boundary(self, omega):
        """phi(j omega) exp(j omega tau)."""
        s = 1j * np.asarray(omega, dtype=float)
        return self.phi(s) * np.exp(s * self.tau)

    def gain(self, omega):
        w = np.asarray(omega, dtype=float)
        return np.sqrt((1 + (self.T_a * w) ** 2) * (1 + (self.T_b * w) ** 2))

    def phase(self, omega):
        w = np.asarray(omega, dtype=float)
        return np.arctan(self.T_a * w) + np.arctan(self.T_b * w) + w * self.tau


def _check_xi(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if not np.prod(xi) < 0:
        raise SpectralError("product of harmonic gains must be negative (odd number of repressions)")
    return xi


def eigenvalues_K1(xi, omega: float | None = None, tau_r=None, tau_p=None) -> np.ndarray:
    """Closed-form eigenvalues of U K1: |prod xi|^(1/N) exp(j (2i-1) pi / N).

    The delays drop out of the characteristic polynomial, so ``omega`` and the
    delay vectors are accepted only for interface symmetry.
    """
    xi = _check_xi(xi)
    n = xi.size
    rho = float(np.prod(np.abs(xi))) ** (1.0 / n)
    k = np.arange(1, n + 1)
    return rho * np.exp(1j * (2 * k - 1) * math.pi / n)


def eigen_K0(eta) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues |prod eta|^(1/N) exp(j 2(i-1) pi / N) and the mu_1 eigenvector.

    The eigenvector is [eta_1, eta_1 eta_2, ..., prod eta] scaled by mu_1's
    cumulative powers; it reduces to the cumulative products when prod eta = 1.
    """
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise SpectralError("bias gains must be positive")
    n = eta.size
    mu1 = float(np.prod(eta)) ** (1.0 / n)
    k = np.arange(n)
    mus = mu1 * np.exp(2j * math.pi * k / n)
    v = np.cumprod(eta) / mu1 ** (k + 1)
    return mus, v


@dataclass(frozen=True)
class CirculantTransform:
    D: np.ndarray
    V: np.ndarray
    q: np.ndarray
    y: np.ndarray
    similarity_error: float


def circulant_transform(xi, omega: float, tau_r, tau_p, *, check_tol: float = 1e-10) -> CirculantTransform:
    """Diagonal similarity taking U K1 to a scaled cyclic shift, and the
    eigenvector y = D q belonging to the eigenvalue at angle pi/N."""
    xi = _check_xi(xi)
    n = xi.size
    U = delay_matrix(omega, tau_r, tau_p)
    M = U @ cyc(xi)
    g = xi * np.diag(U)
    rho = float(np.prod(np.abs(xi))) ** (1.0 / n)
    i = np.arange(1, n + 1)
    cum = np.cumprod(g)
    if n % 2 == 1:
        d = (-1.0) ** (i - 1) * cum / rho ** (i - 1)
        V = -rho * cyc(np.ones(n, dtype=complex))
        q = (-1.0) ** i * np.exp(-1j * (i - 1) * math.pi / n)
    else:
        d = cum / rho ** (i - 1) * np.exp(-1j * i * math.pi / n)
        V = rho * np.exp(1j * math.pi / n) * cyc(np.ones(n, dtype=complex))
        q = np.ones(n, dtype=complex)
    if np.any(np.abs(d) == 0):
        raise SpectralError("singular similarity transform (a harmonic gain is zero)")
    D = np.diag(d)
    err = float(np.max(np.abs(np.diag(1 / d) @ M @ D - V)))
    scale = max(1.0, rho)
    if err > check_tol * scale:
        raise SpectralError(f"similarity check failed: max deviation {err:.3g}")
    return CirculantTransform(D, V, q, D @ q, err)


class Region(enum.Enum):
    INSIDE = "inside"
    ON_BOUNDARY = "on-boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class RegionCheck:
    region: Region
    omega: float | None
    boundary_gain: float | None


def stability_region_check(gamma: complex, loop: LoopTransfer, *, rel_tol: float = 1e-9) -> RegionCheck:
    """Locate ``gamma`` against the region never reached by phi(s) e^{s tau} on Re s >= 0.

    The boundary is symmetric about the real axis, so the lowest crossing
    frequency of the ray through ``gamma`` is found for |arg gamma| by
    bisection on the increasing boundary phase.
    """
    gamma = complex(gamma)
    if gamma == 0:
        raise SpectralError("gamma must be non-zero")
    target = abs(math.atan2(gamma.imag, gamma.real))
    if target == 0.0:
        w = 0.0
    else:
        hi = 1.0 / max(loop.T_a, loop.T_b)
        while loop.phase(hi) < target:
            hi *= 2.0
            if hi > 1e15:
                # phase never reaches the target (no delay and arg = pi)
                return RegionCheck(Region.INSIDE, None, None)
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if loop.phase(mid) < target:
                lo = mid
            else:
                hi = mid
        w = 0.5 * (lo + hi)
    g = float(loop.gain(w))
    r = abs(gamma)
    if abs(r - g) <= rel_tol * g:
        return RegionCheck(Region.ON_BOUNDARY, w, g)
    return RegionCheck(Region.INSIDE if r < g else Region.OUTSIDE, w, g)


def set_distance(a, b) -> float:
    """Hausdorff distance between two finite point sets in the complex plane."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class BalanceResiduals:
    bias: float
    harmonic: float

    def ok(self, tol: float = 1e-6) -> bool:
        return self.bias <= tol and self.harmonic <= tol


def _phasor(analysis_or_profile, network: Network) -> np.ndarray:
    prof = analysis_or_profile
    phases_tilde = prof.phases - prof.omega * network.array("tau_p")
    return prof.amplitudes * np.exp(1j * phases_tilde)


def balance_residuals(network: Network, profile) -> BalanceResiduals:
    """Relative residuals of (I - H(0) K0) x = 0 and (I - H(j w) K1) y = 0.

    ``y`` carries the phases shifted back by omega*tau_p; per-gene transfer
    functions h_i(s) = exp(-s tau_i)/((s/a_i + 1)(s/b_i + 1)) are used.
    """
    w = profile.omega
    mats = gain_matrices(network, w, profile.biases, profile.amplitudes)
    a, b = network.array("a"), network.array("b")
    tau_i = network.array("tau_r") + network.array("tau_p")
    s = 1j * w
    H1 = np.diag(np.exp(-s * tau_i) / ((s / a + 1) * (s / b + 1)))
    x = profile.biases
    y = _phasor(profile, network)
    n = network.n_genes
    r0 = np.linalg.norm((np.eye(n) - mats.K0) @ x) / np.linalg.norm(x)
    r1 = np.linalg.norm((np.eye(n) - H1 @ mats.K1) @ y) / np.linalg.norm(y)
    return BalanceResiduals(float(r0), float(r1))


@dataclass(frozen=True)
class MarginalStabilityReport:
    eigenvalues: np.ndarray
    checks: tuple
    boundary_indices: tuple

    @property
    def ok(self) -> bool:
        """Exactly the conjugate pair lambda_1, lambda_N on the boundary, the rest inside."""
        n = len(self.checks)
        pair = {0, n - 1}
        for k, c in enumerate(self.checks):
            want = Region.ON_BOUNDARY if k in pair else Region.INSIDE
            if c.region is not want:
                return False
        return True


def marginal_stability_check(network: Network, profile, *, rel_tol: float = 1e-6) -> MarginalStabilityReport:
    """Classify every eigenvalue of U K1 at the profile against the boundary curve."""
    mats = gain_matrices(network, profile.omega, profile.biases, profile.amplitudes)
    lam = eigenvalues_K1(mats.xi)
    loop = LoopTransfer.from_network(network)
    checks = tuple(stability_region_check(g, loop, rel_tol=rel_tol) for g in lam)
    on = tuple(k for k, c in enumerate(checks) if c.region is Region.ON_BOUNDARY)
    return MarginalStabilityReport(lam, checks, on)
