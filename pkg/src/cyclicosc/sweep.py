"""Parameter sweeps and analytic-vs-simulated comparison reports."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .balance import Analysis, analyze, approx_period, self_repression_period, solve_frequency
from .dde_sim import SimConfig, SimulationError, default_config, simulate_profile
from .model import Network, Regulation, dimensionless
from .profile import OscillationProfile

__all__ = [
    "SWEEP_PARAMS",
    "SWEEP_COLUMNS",
    "ComparisonReport",
    "compare",
    "vary",
    "template_ring",
    "sweep",
    "sweep_point",
]

SWEEP_PARAMS = ("tau", "tau_tilde", "Q", "N", "a", "b")

SWEEP_COLUMNS = (
    "param", "value", "N", "Q", "tau", "tau_tilde", "T_A",
    "omega_predicted", "period_predicted", "normalized_period_predicted",
    "period_self_repression", "period_linear", "normalized_period_linear",
    "period_sim", "error_predicted_pct", "error_self_repression_pct", "status",
)


def _signed_deg(a):
    """Degrees wrapped into (-180, 180]."""
    d = np.mod(np.asarray(a, dtype=float) + 180.0, 360.0) - 180.0
    return np.where(d == -180.0, 180.0, d)


@dataclass(frozen=True)
class ComparisonReport:
    """Prediction against simulation; errors are signed pred - sim."""

    predicted: OscillationProfile
    simulated: OscillationProfile | None
    analysis: Analysis
    distortion: np.ndarray | None = None
    failure: str | None = None

    @property
    def frequency_error_pct(self) -> float | None:
        if self.simulated is None:
            return None
        return 100.0 * (self.predicted.omega - self.simulated.omega) / self.simulated.omega

    @property
    def phase_error_deg(self) -> np.ndarray | None:
        if self.simulated is None:
            return None
        return _signed_deg(np.degrees(self.predicted.phases - self.simulated.phases))

    @property
    def amplitude_error_pct(self) -> np.ndarray | None:
        if self.simulated is None or self.predicted.amplitudes is None:
            return None
        return 100.0 * (self.predicted.amplitudes - self.simulated.amplitudes) / self.simulated.amplitudes

    @property
    def bias_error_pct(self) -> np.ndarray | None:
        if self.simulated is None or self.predicted.biases is None:
            return None
        return 100.0 * (self.predicted.biases - self.simulated.biases) / self.simulated.biases

    def within(self, freq_pct: float = 10.0, phase_deg: float = 10.0) -> bool:
        if self.simulated is None:
            return False
        return abs(self.frequency_error_pct) <= freq_pct and bool(
            np.all(np.abs(self.phase_error_deg) <= phase_deg)
        )


def compare(network: Network, config: SimConfig | None = None) -> ComparisonReport:
    analysis = analyze(network)
    try:
        _, sim, diag = simulate_profile(network, config)
    except SimulationError as exc:
        return ComparisonReport(analysis.profile, None, analysis, failure=str(exc))
    return ComparisonReport(analysis.profile, sim, analysis, diag.distortion)


def template_ring(template: Network, n_genes: int) -> Network:
    """Replicate gene 1 of ``template`` N times; all repressions for odd N,
    one activation (gene 2) for even N."""
    st = template.stages[0]
    regs = [Regulation.REPRESSION] * n_genes
    if n_genes % 2 == 0:
        regs[1] = Regulation.ACTIVATION
    return Network(tuple(replace(st, regulation=r) for r in regs))


def _with_mean_delay(network: Network, tau: float) -> Network:
    tr, tp = network.array("tau_r"), network.array("tau_p")
    cur = float(np.sum(tr + tp)) / network.n_genes
    if cur > 0:
        k = tau / cur
        tr, tp = tr * k, tp * k
    else:
        tr = tp = np.full(network.n_genes, tau / 2)
    return Network(tuple(replace(s, tau_r=float(tr[i]), tau_p=float(tp[i])) for i, s in enumerate(network.stages)))


def vary(network: Network, param: str, value: float) -> Network:
    """Network with one sweep axis set to ``value``; other quantities held.

    ``tau``/``tau_tilde`` rescale every delay proportionally; ``Q`` keeps
    T_A and which of mRNA/protein is the slower; ``N`` rebuilds the ring
    from gene 1.
    """
    if param == "tau":
        return _with_mean_delay(network, value)
    if param == "tau_tilde":
        p = dimensionless(network)
        return _with_mean_delay(network, value * p.T_A)
    if param == "Q":
        p = dimensionless(network)
        if not 0 < value <= 1:
            raise ValueError("Q must lie in (0, 1]")
        s = math.sqrt(max(0.0, 1 - value * value))
        fast, slow = p.T_A * (1 - s), p.T_A * (1 + s)
        T_a, T_b = (fast, slow) if p.T_a <= p.T_b else (slow, fast)
        return network.with_stages(a=1 / T_a, b=1 / T_b)
    if param == "N":
        n = int(round(value))
        return template_ring(network, n)
    if param in ("a", "b"):
        return network.with_stages(**{param: float(value)})
    raise ValueError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")


def sweep_point(args) -> dict:
    network, param, value, mode, sim_config = args
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(param=param, value=value, status="ok")
    try:
        net = vary(network, param, value)
        p = dimensionless(net)
        omega = solve_frequency(p)
        period = 2 * math.pi / omega
        row.update(
            N=p.n_genes, Q=p.Q, tau=p.tau, tau_tilde=p.tau_tilde, T_A=p.T_A,
            omega_predicted=omega, period_predicted=period,
            normalized_period_predicted=period / p.T_A,
            normalized_period_linear=approx_period(p), period_linear=approx_period(p) * p.T_A,
        )
        if p.n_genes == 1:
            s = net.stages[0]
            row["period_self_repression"] = self_repression_period(s.tau_r, s.tau_p, s.a, s.b)
    except Exception as exc:  # per-row failure, sweep continues
        row["status"] = f"analytic failed: {exc}"
        return row
    if mode in ("simulated", "both"):
        try:
            cfg = sim_config or default_config(net)
            _, prof, _ = simulate_profile(net, cfg)
            row["period_sim"] = prof.period
            if mode == "both":
                row["error_predicted_pct"] = 100 * (row["period_predicted"] - prof.period) / prof.period
                if row["period_self_repression"] != "":
                    row["error_self_repression_pct"] = 100 * (row["period_self_repression"] - prof.period) / prof.period
        except (SimulationError, ValueError) as exc:
            row["status"] = f"simulation failed: {exc}"
    return row


def sweep(
    network: Network,
    param: str,
    values,
    mode: str = "analytic",
    *,
    sim_config: SimConfig | None = None,
    jobs: int = 1,
) -> list[dict]:
    """One row per grid value, in grid order whatever ``jobs`` is."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    if mode not in ("analytic", "simulated", "both"):
        raise ValueError("mode must be analytic, simulated or both")
    tasks = [(network, param, float(v), mode, sim_config) for v in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(sweep_point, tasks))
    return [sweep_point(t) for t in tasks]
