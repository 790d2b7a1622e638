"""Fixed-step delay-differential simulator for the cyclic gene network.

The integrator is classical RK4. Delayed states are read from a ring buffer
of committed (state, derivative) pairs through cubic Hermite interpolation,
which keeps the method fourth order as long as every positive delay is at
least one step long. Zero delays read the current stage state instead.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .model import Network
from .profile import OscillationProfile, wrap_pi

__all__ = [
    "SimConfig",
    "TimeSeries",
    "FitDiagnostics",
    "SimulationError",
    "NoOscillationError",
    "NotSettledError",
    "simulate",
    "extract_profile",
    "crossing_frequency",
    "fit_harmonics",
    "refit_frequency",
    "default_config",
    "simulate_profile",
]

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """Integration could not be carried out or blew up."""


class NoOscillationError(SimulationError):
    """The analysed window contains too few mean crossings."""


class NotSettledError(SimulationError):
    """The period drifts across the analysis window."""


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``initial_history`` gives constant values for t <= 0, ordered
    (r_1..r_N, p_1..p_N); ``None`` means r = 1 and p_i = 1 + 0.1 (i - 1), which
    is off the synchronous manifold of homogeneous rings. ``output_interval`` must
    be a multiple of ``step`` (None keeps every step).
    """

    step: float = 0.02
    t_end: float = 2000.0
    transient_fraction: float = 0.5
    initial_history: tuple[float, ...] | None = None
    output_interval: float | None = 0.1

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if not self.t_end > self.step:
            raise ValueError("t_end must exceed one step")
        if not 0 <= self.transient_fraction < 1:
            raise ValueError("transient_fraction must lie in [0, 1)")
        if self.initial_history is not None:
            hist = tuple(float(v) for v in self.initial_history)
            if any(v < 0 or not math.isfinite(v) for v in hist):
                raise ValueError("initial history must be finite and non-negative")
            object.__setattr__(self, "initial_history", hist)

    @property
    def stride(self) -> int:
        if self.output_interval is None:
            return 1
        k = self.output_interval / self.step
        stride = int(round(k))
        if stride < 1 or abs(k - stride) > 1e-9 * max(1.0, k):
            raise ValueError("output_interval must be a positive multiple of step")
        return stride


@dataclass(frozen=True)
class TimeSeries:
    """Sampled trajectories; ``r`` and ``p`` have shape (N, len(times))."""

    times: np.ndarray
    r: np.ndarray
    p: np.ndarray

    @property
    def n_genes(self) -> int:
        return self.p.shape[0]

    def window(self, t_start: float) -> "TimeSeries":
        keep = self.times >= t_start
        return TimeSeries(self.times[keep], self.r[:, keep], self.p[:, keep])

    def to_csv(self, path_or_buf) -> None:
        n = self.n_genes
        header = ["time"] + [f"r_{i + 1}" for i in range(n)] + [f"p_{i + 1}" for i in range(n)]
        data = np.column_stack([self.times, self.r.T, self.p.T])
        np.savetxt(path_or_buf, data, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


@numba.njit(cache=True)
def _hermite(buf_y, buf_f, L, last, h, s, j, hist, cur):
    # value of component j at time s, with `last` the newest committed step
    if s <= 0.0:
        return hist[j]
    u = s / h
    k = int(math.floor(u))
    if k >= last:
        k = last - 1
    th = u - k
    if th > 1.0:
        # would read past committed history; callers guarantee this cannot happen
        th = 1.0
    i0 = k % L
    i1 = (k + 1) % L
    th2 = th * th
    th3 = th2 * th
    return ((2 * th3 - 3 * th2 + 1) * buf_y[i0, j] + (th3 - 2 * th2 + th) * h * buf_f[i0, j]
            + (-2 * th3 + 3 * th2) * buf_y[i1, j] + (th3 - th2) * h * buf_f[i1, j])


@numba.njit(cache=True)
def _rhs(t, y, out, a, b, c, beta, nu, act, tau_r, tau_p, buf_y, buf_f, L, last, h, hist):
    n = a.shape[0]
    for i in range(n):
        up = i - 1 if i > 0 else n - 1
        if tau_p[up] > 0.0:
            pd = _hermite(buf_y, buf_f, L, last, h, t - tau_p[up], n + up, hist, y)
        else:
            pd = y[n + up]
        if pd < 0.0:
            pd = 0.0
        q = pd ** nu[i]
        f = q / (1.0 + q) if act[i] else 1.0 / (1.0 + q)
        if tau_r[i] > 0.0:
            rd = _hermite(buf_y, buf_f, L, last, h, t - tau_r[i], i, hist, y)
        else:
            rd = y[i]
        out[i] = -a[i] * y[i] + beta[i] * f
        out[n + i] = c[i] * rd - b[i] * y[n + i]


@numba.njit(cache=True)
def _integrate(a, b, c, beta, nu, act, tau_r, tau_p, hist, h, nsteps, stride, L):
    n = a.shape[0]
    m = 2 * n
    nout = nsteps // stride + 1
    out = np.empty((nout, m))
    buf_y = np.zeros((L, m))
    buf_f = np.zeros((L, m))
    y = hist.copy()
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    ys = np.empty(m)
    buf_y[0, :] = y
    _rhs(0.0, y, k1, a, b, c, beta, nu, act, tau_r, tau_p, buf_y, buf_f, L, 0, h, hist)
    buf_f[0, :] = k1
    out[0, :] = y
    for step in range(nsteps):
        t = step * h
        for j in range(m):
            k1[j] = buf_f[step % L, j]
            ys[j] = y[j] + 0.5 * h * k1[j]
        _rhs(t + 0.5 * h, ys, k2, a, b, c, beta, nu, act, tau_r, tau_p, buf_y, buf_f, L, step, h, hist)
        for j in range(m):
            ys[j] = y[j] + 0.5 * h * k2[j]
        _rhs(t + 0.5 * h, ys, k3, a, b, c, beta, nu, act, tau_r, tau_p, buf_y, buf_f, L, step, h, hist)
        for j in range(m):
            ys[j] = y[j] + h * k3[j]
        _rhs(t + h, ys, k4, a, b, c, beta, nu, act, tau_r, tau_p, buf_y, buf_f, L, step, h, hist)
        for j in range(m):
            y[j] = y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not math.isfinite(y[j]):
                return out[: step // stride + 1], step + 1
        nxt = (step + 1) % L
        buf_y[nxt, :] = y
        _rhs(t + h, y, k1, a, b, c, beta, nu, act, tau_r, tau_p, buf_y, buf_f, L, step + 1, h, hist)
        buf_f[nxt, :] = k1
        if (step + 1) % stride == 0:
            out[(step + 1) // stride, :] = y
    return out, -1


def simulate(network: Network, config: SimConfig) -> TimeSeries:
    """Integrate the delayed model from a constant history up to ``config.t_end``.

    Raises SimulationError when a positive delay is shorter than one step
    (the explicit lookup would need uncommitted state) or when the state
    becomes non-finite.
    """
    n = network.n_genes
    h = float(config.step)
    tau_r = network.array("tau_r")
    tau_p = network.array("tau_p")
    delays = np.concatenate([tau_r, tau_p])
    positive = delays[delays > 0]
    if positive.size and positive.min() < h * (1 - 1e-12):
        raise SimulationError(
            f"step {h} exceeds the shortest positive delay {positive.min()}; "
            f"use step <= {positive.min() / 20:g} (one twentieth of it)"
        )
    if positive.size and h > positive.min() / 20 * (1 + 1e-12):
        log.debug("step %g is coarser than the recommended min(delay)/20", h)
    if config.initial_history is None:
        hist = np.concatenate([np.ones(n), 1.0 + 0.1 * np.arange(n)])
    else:
        hist = np.asarray(config.initial_history, dtype=float)
        if hist.shape != (2 * n,):
            raise ValueError(f"initial_history must have {2 * n} entries (r then p)")
    stride = config.stride
    nsteps = int(round(config.t_end / h))
    nsteps -= nsteps % stride
    L = int(math.ceil(delays.max() / h)) + 3 if delays.size else 3
    act = np.array([s.delta > 0 for s in network.stages])
    out, failed_at = _integrate(
        network.array("a"), network.array("b"), network.array("c"), network.array("beta"),
        network.array("nu"), act, tau_r, tau_p, hist, h, nsteps, stride, L,
    )
    if failed_at >= 0:
        raise SimulationError(f"state became non-finite at t = {failed_at * h:g} min")
    times = np.arange(out.shape[0]) * (stride * h)
    return TimeSeries(times, np.ascontiguousarray(out[:, :n].T), np.ascontiguousarray(out[:, n:].T))


@dataclass(frozen=True)
class FitDiagnostics:
    """Quality figures of the first-harmonic fit.

    ``distortion`` is residual RMS divided by the fitted amplitude, per
    species; ``crossing_omega`` is the estimate from mean crossings and
    ``period_drift`` the relative change in period between the two halves
    of the window.
    """

    crossing_omega: float
    refit_omega: float
    n_cycles: int
    period_drift: float
    distortion: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residual_rms: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _upward_crossings(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    d = v - v.mean()
    idx = np.nonzero((d[:-1] < 0) & (d[1:] >= 0))[0]
    # linear interpolation of the crossing instant
    w = -d[idx] / (d[idx + 1] - d[idx])
    return t[idx] + w * (t[idx + 1] - t[idx])


def crossing_frequency(t: np.ndarray, v: np.ndarray, min_cycles: int = 10) -> tuple[float, np.ndarray]:
    """Angular frequency from the mean spacing of upward mean crossings."""
    v = np.asarray(v, float)
    if v.size == 0 or np.ptp(v) <= 1e-6 * max(1.0, abs(v.mean())):
        raise NoOscillationError("no oscillation detected (trajectory settled to an equilibrium)")
    tc = _upward_crossings(np.asarray(t, float), v)
    if tc.size < 2:
        raise NoOscillationError("no oscillation detected (fewer than two mean crossings)")
    spacing = np.diff(tc)
    if spacing.size < min_cycles:
        raise NoOscillationError(
            f"no oscillation detected: only {spacing.size} cycles in the window, need {min_cycles}"
        )
    return 2 * math.pi / spacing.mean(), tc


def fit_harmonics(t: np.ndarray, values: np.ndarray, omega: float):
    """Least squares of values ~ x + alpha sin(omega t) + beta cos(omega t).

    ``values`` has shape (M, len(t)). Returns (bias, amplitude, phase, rms)
    arrays where phase = atan2(beta, alpha).
    """
    values = np.atleast_2d(values)
    A = np.column_stack([np.ones_like(t), np.sin(omega * t), np.cos(omega * t)])
    coef, *_ = np.linalg.lstsq(A, values.T, rcond=None)
    resid = values.T - A @ coef
    rms = np.sqrt(np.mean(resid**2, axis=0))
    x, al, be = coef
    return x, np.hypot(al, be), np.arctan2(be, al), rms


def _integer_period_window(t: np.ndarray, omega: float) -> np.ndarray:
    period = 2 * math.pi / omega
    n_per = int((t[-1] - t[0]) / period)
    return t <= t[0] + n_per * period + 1e-12


def refit_frequency(t: np.ndarray, values: np.ndarray, omega0: float, rel_width: float = 0.01) -> float:
    """Frequency minimising the summed first-harmonic fit residual.

    Searched by bounded golden-section/parabolic minimisation within
    ``omega0 * (1 +- rel_width)``; the window is fixed to an integer number of
    periods of ``omega0``.
    """
    values = np.atleast_2d(values)
    keep = _integer_period_window(t, omega0)
    tt, vv = t[keep] - t[keep][0], values[:, keep]

    # search the offset u = omega/omega0 - 1: the minimiser's tolerance has a
    # sqrt(eps)*|u| term, which is tiny near u = 0 but not near omega0
    def cost(u):
        return float(np.sum(fit_harmonics(tt, vv, omega0 * (1 + u))[3] ** 2))

    res = minimize_scalar(cost, bounds=(-rel_width, rel_width), method="bounded",
                          options={"xatol": 1e-12})

    # Polish on the gradient: locating a minimum from cost values alone
    # resolves only ~sqrt(eps), a sign change of the derivative resolves ~eps.
    def grad(u):
        w = omega0 * (1 + u)
        A = np.column_stack([np.ones_like(tt), np.sin(w * tt), np.cos(w * tt)])
        coef, *_ = np.linalg.lstsq(A, vv.T, rcond=None)
        r = vv.T - A @ coef
        dA = np.column_stack([tt * np.cos(w * tt), -tt * np.sin(w * tt)])
        return float(-2.0 * np.sum(r * (dA @ coef[1:])))

    u0, width = float(res.x), 1e-7
    while width <= rel_width:
        lo, hi = max(u0 - width, -rel_width), min(u0 + width, rel_width)
        glo, ghi = grad(lo), grad(hi)
        if glo < 0 < ghi:
            u0 = brentq(grad, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            break
        width *= 10
    return float(omega0 * (1 + u0))


def extract_profile(
    series: TimeSeries,
    transient_fraction: float = 0.5,
    *,
    min_cycles: int = 10,
    max_drift: float = 0.01,
) -> tuple[OscillationProfile, FitDiagnostics]:
    """Fit p_i(t) ~ x_i + y_i sin(omega t + phi_i) to the post-transient window."""
    t_end = series.times[-1]
    win = series.window(series.times[0] + transient_fraction * (t_end - series.times[0]))
    t = win.times
    omega_c, tc = crossing_frequency(t, win.p[0], min_cycles=min_cycles)
    spacing = np.diff(tc)
    half = spacing.size // 2
    drift = abs(spacing[half:].mean() - spacing[:half].mean()) / spacing.mean()
    if drift > max_drift:
        raise NotSettledError(f"oscillation not settled: period drifts {100 * drift:.2f}% across the window")
    omega = refit_frequency(t, win.p, omega_c)
    keep = _integer_period_window(t, omega)
    t0 = t[keep][0]
    x, y, phi, rms = fit_harmonics(t[keep] - t0, win.p[:, keep], omega)
    phases = wrap_pi(phi - phi[0])
    profile = OscillationProfile(omega, np.atleast_1d(phases), x, y)
    diag = FitDiagnostics(
        crossing_omega=omega_c,
        refit_omega=omega,
        n_cycles=int(spacing.size),
        period_drift=float(drift),
        distortion=rms / np.where(y > 0, y, np.inf),
        residual_rms=rms,
    )
    return profile, diag


def default_config(network: Network, *, periods: float = 40.0, step: float | None = None) -> SimConfig:
    """Step of min(delay)/20 (at most 0.1 min) and a horizon of ``periods`` predicted periods."""
    from .balance import solve_frequency_heterogeneous

    delays = np.concatenate([network.array("tau_r"), network.array("tau_p")])
    positive = delays[delays > 0]
    if step is None:
        step = min(0.1, positive.min() / 20) if positive.size else 0.01
        # snap to a divisor of 0.1 min so samples land on a common grid
        step = 0.1 / math.ceil(0.1 / step - 1e-9)
    try:
        period = 2 * math.pi / solve_frequency_heterogeneous(network)
    except Exception:
        period = 100.0
    t_end = max(periods * period, 200.0)
    interval = step * max(1, round(0.1 / step))
    return SimConfig(step=step, t_end=t_end, output_interval=interval)


def _window_periods(series: TimeSeries, cycles: int = 5) -> tuple[float, float] | None:
    tc = _upward_crossings(series.times, series.p[0])
    if tc.size < 2 * cycles + 1:
        return None
    last = np.diff(tc[-(cycles + 1):]).mean()
    prev = np.diff(tc[-(2 * cycles + 1):-cycles]).mean()
    return prev, last


def simulate_profile(
    network: Network,
    config: SimConfig | None = None,
    *,
    settle_tol: float = 1e-3,
    max_extensions: int = 4,
) -> tuple[TimeSeries, OscillationProfile, FitDiagnostics]:
    """Simulate, lengthening the horizon until the last two 5-cycle windows
    agree on the period within ``settle_tol``, then extract the profile."""
    config = config or default_config(network)
    for attempt in range(max_extensions + 1):
        series = simulate(network, config)
        periods = _window_periods(series.window(config.transient_fraction * config.t_end))
        settled = periods is not None and abs(periods[1] - periods[0]) <= settle_tol * periods[1]
        if settled or attempt == max_extensions:
            break
        if periods is None and attempt > 0:
            break
        config = SimConfig(
            step=config.step, t_end=1.5 * config.t_end, transient_fraction=config.transient_fraction,
            initial_history=config.initial_history, output_interval=config.output_interval,
        )
        log.info("extending horizon to %g min", config.t_end)
    profile, diag = extract_profile(series, config.transient_fraction)
    return series, profile, diag
