"""Bias and first-harmonic describing functions of scaled static nonlinearities.

For an input x + y sin(t) the gains are

    eta = R2 / (2 pi x) * int_{-pi}^{pi} f(x + y sin t) dt
    xi  = R2 / (pi y)   * int_{-pi}^{pi} f(x + y sin t) sin t dt

The integrands are smooth and 2*pi periodic, so the composite trapezoid rule
on an equispaced grid converges geometrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

__all__ = [
    "DescribingPair",
    "DescribingError",
    "UndefinedBiasError",
    "NegativeArgumentError",
    "QuadratureError",
    "Nonlinearity",
    "IdentityNonlinearity",
    "describe",
    "periodic_mean",
    "describe_grid",
    "DEFAULT_PANELS",
    "MAX_PANELS",
]

DEFAULT_PANELS = 2048
MAX_PANELS = 2**20
REL_TOL = 1e-10
SMALL_Y = 1e-9


class DescribingError(ValueError):
    pass


class UndefinedBiasError(DescribingError):
    pass


class NegativeArgumentError(DescribingError):
    pass


class QuadratureError(DescribingError):
    pass


class Nonlinearity(Protocol):
    defined_on_negatives: bool

    def __call__(self, p): ...

    def derivative(self, p): ...


class IdentityNonlinearity:
    """f(p) = p. Linear reference used to check the quadrature."""

    defined_on_negatives = True
    sign = 1

    def __call__(self, p):
        return np.asarray(p, dtype=float)

    def derivative(self, p):
        return np.ones_like(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class DescribingPair:
    eta: float
    xi: float


def periodic_mean(g, panels: int) -> float:
    """Trapezoid mean of a 2*pi-periodic callable over ``panels`` nodes."""
    t = -math.pi + (2 * math.pi / panels) * np.arange(panels)
    return float(np.mean(g(t)))


def _adaptive_means(f, x: float, y: float, panels: int, rel_tol: float, max_panels: int):
    """Means of f(x + y sin t) and f(x + y sin t) sin t, doubling the grid until stable."""

    def means(m):
        t = -math.pi + (2 * math.pi / m) * np.arange(m)
        s = np.sin(t)
        v = f(x + y * s)
        return float(np.mean(v)), float(np.mean(v * s)), float(np.mean(np.abs(v)))

    m = panels
    prev = means(m)
    while True:
        if 2 * m > max_panels:
            raise QuadratureError(
                f"describing-function quadrature did not converge within {max_panels} panels"
            )
        m *= 2
        cur = means(m)
        floor = 1e-15 * cur[2]
        ok = all(abs(c - p) <= rel_tol * abs(c) + floor for c, p in zip(cur[:2], prev[:2]))
        prev = cur
        if ok:
            return cur[0], cur[1], m


def describe(
    f: Nonlinearity,
    R_squared: float,
    x: float,
    y: float,
    *,
    panels: int = DEFAULT_PANELS,
    rel_tol: float = REL_TOL,
    max_panels: int = MAX_PANELS,
) -> DescribingPair:
    """Bias gain ``eta`` and harmonic gain ``xi`` of ``R_squared * f``.

    Small amplitudes (y < 1e-9 max(1, x)) return the analytic limits
    eta = R2 f(x)/x and xi = R2 f'(x).
    """
    if x < 0 or y < 0:
        raise DescribingError(f"bias and amplitude must be >= 0, got x={x!r}, y={y!r}")
    if y < SMALL_Y * max(1.0, x):
        if x == 0:
            raise UndefinedBiasError("eta is undefined at x = 0, y = 0")
        return DescribingPair(
            float(R_squared * f(x) / x), float(R_squared * f.derivative(x))
        )
    if x == 0:
        raise UndefinedBiasError("eta is undefined at zero bias")
    if x - y < 0 and not f.defined_on_negatives:
        raise NegativeArgumentError(
            f"x - y = {x - y:g} < 0 puts the nonlinearity outside its domain"
        )
    m0, m1, _ = _adaptive_means(f, x, y, panels, rel_tol, max_panels)
    # int f dt = 2 pi m0, int f sin dt = 2 pi m1
    return DescribingPair(R_squared * m0 / x, 2.0 * R_squared * m1 / y)


def describe_grid(f: Nonlinearity, R_squared: float, x, y, panels: int = 512):
    """Vectorised fixed-resolution (eta, xi) over broadcast arrays ``x``, ``y``.

    Entries outside the nonlinearity's domain, or with x = 0, come back NaN.
    Intended for scanning; use :func:`describe` where accuracy matters.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    t = -math.pi + (2 * math.pi / panels) * np.arange(panels)
    s = np.sin(t)
    arg = x[..., None] + y[..., None] * s
    with np.errstate(invalid="ignore", divide="ignore"):
        v = f(arg)
        m0 = v.mean(axis=-1)
        m1 = (v * s).mean(axis=-1)
        small = y < SMALL_Y * np.maximum(1.0, x)
        eta = np.where(x > 0, R_squared * m0 / x, np.nan)
        xi = np.where(small, R_squared * f.derivative(x), 2.0 * R_squared * m1 / np.where(small, 1.0, y))
    if not f.defined_on_negatives:
        bad = x - y < 0
        eta = np.where(bad, np.nan, eta)
        xi = np.where(bad, np.nan, xi)
    return eta, xi
