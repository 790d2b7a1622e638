"""Acceptance criteria, one test each. Tolerances are fixed by the build contract."""

import itertools
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from cyclicosc.balance import (
    ParameterIntervals,
    analyze,
    frequency_bounds,
    self_repression_period,
    solve_bias_amplitude,
    solve_frequency,
    solve_frequency_heterogeneous,
    solve_frequency_normalized,
    solve_phases,
)
from cyclicosc.describing import describe
from cyclicosc.dde_sim import simulate_profile
from cyclicosc.model import GeneStage, HillNonlinearity, Network, Regulation, dimensionless
from cyclicosc.netfile import load_network
from cyclicosc.spectral import (
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
from cyclicosc.sweep import sweep, vary

PENTILATOR_SIM_PHASES = np.array([141.1, 110.1, 251.7, 219.8])


def deg_diff(a, b):
    return (np.asarray(a) - np.asarray(b) + 180.0) % 360.0 - 180.0


def test_criterion_01_pentilator_frequency(criterion, pentilator):
    start = time.perf_counter()
    w_pred = solve_frequency(dimensionless(pentilator))
    _, sim, _ = simulate_profile(pentilator)
    elapsed = time.perf_counter() - start
    rel = 100 * (w_pred - sim.omega) / sim.omega
    criterion(1, [
        (f"predicted omega {w_pred:.5f} = 0.0898 +- 0.001", abs(w_pred - 8.98e-2) <= 1e-3),
        (f"simulated omega {sim.omega:.5f} = 0.0861 +- 5%", abs(sim.omega - 8.61e-2) <= 0.05 * 8.61e-2),
        (f"relative error {rel:.2f}% = 4.3 +- 1.5", abs(rel - 4.3) <= 1.5),
        (f"runtime {elapsed:.1f}s < 10s", elapsed < 10),
    ])


def test_criterion_02_hes7_period(criterion, hes7, hes7_sim):
    p = dimensionless(hes7)
    period = 2 * math.pi / solve_frequency(p)
    s = hes7.stages[0]
    h = self_repression_period(s.tau_r, s.tau_p, s.a, s.b)
    sim_period = hes7_sim[1].period
    criterion(2, [
        (f"predicted period {period:.2f} = 120.1 +- 0.5", abs(period - 120.1) <= 0.5),
        (f"simulated period {sim_period:.2f} = 120 +- 5", abs(sim_period - 120.0) <= 5.0),
        (f"closed-form estimate {h!r} = 120.0 (1e-12)", abs(h - 120.0) <= 1e-12),
    ])


def test_criterion_03_pentilator_phases(criterion, pentilator, pentilator_sim):
    sim = pentilator_sim[1]
    sim_deg = np.mod(np.degrees(sim.phases[1:]), 360)
    pred_deg = np.mod(np.degrees(solve_phases(pentilator, solve_frequency(dimensionless(pentilator)))[1:]), 360)
    checks = []
    for i, (s, ref) in enumerate(zip(sim_deg, PENTILATOR_SIM_PHASES), start=2):
        checks.append((f"sim p{i} {s:.1f} vs {ref} (+-3)", abs(deg_diff(s, ref)) <= 3.0))
    for i, (pr, s) in enumerate(zip(pred_deg, sim_deg), start=2):
        checks.append((f"pred p{i} {pr:.1f} vs sim {s:.1f} (+-6)", abs(deg_diff(pr, s)) <= 6.0))
    criterion(3, checks)


def test_criterion_04_three_ring_phases(criterion, ring3):
    w = solve_frequency(dimensionless(ring3))
    pred = np.mod(np.degrees(solve_phases(ring3, w)), 360)
    _, sim, _ = simulate_profile(ring3)
    sim_deg = np.mod(np.degrees(sim.phases), 360)
    ladder = np.array([0.0, 120.0, 240.0])
    criterion(4, [
        (f"predicted {np.round(pred, 12).tolist()} exact ladder", np.max(np.abs(deg_diff(pred, ladder))) <= 1e-9),
        (f"simulated {np.round(sim_deg, 3).tolist()} within 3 deg", np.max(np.abs(deg_diff(sim_deg, ladder))) <= 3.0),
    ])


def test_criterion_05_delay_sweep_comparison(criterion, hes7):
    row = sweep(hes7, "tau", [50.0], mode="both")[0]
    e1, eh = row["error_predicted_pct"], row["error_self_repression_pct"]
    wt = analyze(hes7, with_amplitude=False)
    criterion(5, [
        (f"frequency-equation error {e1:.2f}% = -6.28 +- 2", abs(e1 + 6.28) <= 2.0),
        (f"closed-form error {eh:.2f}% = -9.18 +- 2", abs(eh + 9.18) <= 2.0),
        (f"wild type {wt.period:.2f} vs {wt.self_repression:.2f} within 1 min", abs(wt.period - wt.self_repression) <= 1.0),
    ])


def test_criterion_06_linear_period_trend(criterion, ring3):
    tt = np.linspace(2, 10, 17)
    rows = sweep(ring3, "tau_tilde", tt)
    periods = np.array([r["normalized_period_predicted"] for r in rows])
    slope = np.polyfit(tt, periods, 1)[0]
    criterion(6, [(f"slope {slope:.3f} = 2N = 6 +- 10%", abs(slope - 6) <= 0.6)])


def test_criterion_07_bias_amplitude(criterion, pentilator, hes7, pentilator_sim):
    checks = []
    for name, net in (("pentilator", pentilator), ("hes7", hes7)):
        w = solve_frequency(dimensionless(net))
        ba = solve_bias_amplitude(net, w)
        checks.append((f"{name} closure {ba.residual:.1e} <= 1e-6", ba.residual <= 1e-6))
        m = gain_matrices(net, w, ba.biases, ba.amplitudes)
        p = dimensionless(net)
        phi = math.sqrt((1 + (p.T_a * w) ** 2) * (1 + (p.T_b * w) ** 2))
        e_a = abs(np.prod(m.eta) - 1)
        e_b = abs(abs(np.prod(m.xi)) ** (1 / net.n_genes) - phi) / phi
        checks.append((f"{name} bias-gain product {e_a:.1e}", e_a <= 1e-6))
        checks.append((f"{name} harmonic-gain product {e_b:.1e}", e_b <= 1e-6))
    pred = analyze(pentilator).profile
    sim = pentilator_sim[1]
    ex = np.abs(pred.biases - sim.biases) / sim.biases
    ey = np.abs(pred.amplitudes - sim.amplitudes) / sim.amplitudes
    checks.append((f"pentilator bias within 20% (worst {100 * ex.max():.0f}%)", bool(np.all(ex <= 0.2))))
    checks.append((f"pentilator amplitude within 20% (worst {100 * ey.max():.0f}%)", bool(np.all(ey <= 0.2))))
    criterion(7, checks)


def _random_xi(rng, n):
    xi = rng.uniform(0.2, 3.0, n) * rng.choice([-1, 1], n)
    if np.prod(xi) > 0:
        xi[0] = -xi[0]
    return xi


def test_criterion_08_spectral_identities(criterion, pentilator, hes7):
    rng = np.random.default_rng(2024)
    worst_k1 = worst_k0 = worst_sim = 0.0
    for n in (1, 2, 3, 5, 8):
        for _ in range(25):
            xi = _random_xi(rng, n)
            eta = rng.uniform(0.1, 4, n)
            w = rng.uniform(0.01, 2)
            tr, tp = rng.uniform(0, 5, n), rng.uniform(0, 5, n)
            M = delay_matrix(w, tr, tp) @ cyc(xi)
            worst_k1 = max(worst_k1, set_distance(eigenvalues_K1(xi), np.linalg.eigvals(M)))
            worst_k0 = max(worst_k0, set_distance(eigen_K0(eta)[0], np.linalg.eigvals(cyc(eta))))
            ct = circulant_transform(xi, w, tr, tp)
            d = np.diag(ct.D)
            worst_sim = max(worst_sim, float(np.max(np.abs(np.diag(1 / d) @ M @ ct.D - ct.V))))
    checks = [
        (f"U K1 eigenvalues vs dense {worst_k1:.1e}", worst_k1 <= 1e-9),
        (f"K0 eigenvalues vs dense {worst_k0:.1e}", worst_k0 <= 1e-9),
        (f"circulant similarity {worst_sim:.1e}", worst_sim <= 1e-9),
    ]
    for name, net in (("pentilator", pentilator), ("hes7", hes7)):
        prof = analyze(net).profile
        res = balance_residuals(net, prof)
        checks.append((f"{name} closed-loop residuals {max(res.bias, res.harmonic):.1e}", res.ok(1e-6)))
        rep = marginal_stability_check(net, prof)
        regions = [c.region for c in rep.checks]
        # lambda_1 and its conjugate lambda_N form the marginal pair; the rest must be inside
        pair_ok = regions[0] is Region.ON_BOUNDARY and regions[-1] is Region.ON_BOUNDARY
        rest_ok = all(r is Region.INSIDE for r in regions[1:-1])
        checks.append((f"{name} eigenvalue regions {[r.value for r in regions]}", pair_ok and rest_ok))
    criterion(8, checks)


def test_criterion_09_describing_quadrature(criterion):
    worst = 0.0
    for x, frac, nu in itertools.product(np.linspace(0.5, 4.0, 5), np.linspace(0.1, 0.9, 5), (1.0, 2.0, 3.0)):
        f = HillNonlinearity(nu, Regulation.REPRESSION)
        d = describe(f, 1.0, x, frac * x)
        fine = describe(f, 1.0, x, frac * x, panels=20480)
        worst = max(worst, abs(d.eta - fine.eta) / abs(fine.eta), abs(d.xi - fine.xi) / abs(fine.xi))
    cont = 0.0
    for x, nu, reg in itertools.product((0.5, 1.0, 4.0), (1.0, 2.0, 3.0), Regulation):
        f = HillNonlinearity(nu, reg)
        a, b = describe(f, 1.0, x, 1e-6), describe(f, 1.0, x, 0.0)
        cont = max(cont, abs(a.eta - b.eta), abs(a.xi - b.xi))
    criterion(9, [
        (f"working vs 10x finer {worst:.1e} <= 1e-8", worst <= 1e-8),
        (f"small-amplitude continuity {cont:.1e} <= 1e-4", cont <= 1e-4),
    ])


def test_criterion_10_properties(criterion, hes7):
    checks = []
    for Q in (0.3, 0.6, 1.0):
        ws = [solve_frequency_normalized(3, Q, t) for t in (0, 0.5, 1, 2, 5)]
        checks.append((f"decreasing in tau_tilde at Q={Q}", all(a > b for a, b in zip(ws, ws[1:]))))
        ws = [solve_frequency_normalized(n, Q, 1.0) for n in (3, 5, 7, 9)]
        checks.append((f"decreasing in N at Q={Q}", all(a > b for a, b in zip(ws, ws[1:]))))

    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 9))
        regs = [Regulation.REPRESSION] * n
        if n % 2 == 0:
            regs[0] = Regulation.ACTIVATION
        a, b = rng.uniform(0.05, 3, 2)
        tr, tp = rng.uniform(0.1, 5, n), rng.uniform(0, 5, n)
        net = Network(tuple(GeneStage(a, b, 1.0, 2.0, tr[i], tp[i], regs[i]) for i in range(n)))
        w0, w1 = solve_frequency(dimensionless(net)), solve_frequency_heterogeneous(net)
        worst = max(worst, abs(w0 - w1) / w0)
    checks.append((f"heterogeneous = homogeneous, 100 draws, worst {worst:.1e}", worst <= 1e-9))

    iv = ParameterIntervals.around(hes7, 0.1)
    lo, hi = frequency_bounds(iv, hes7.array("tau_r"), hes7.array("tau_p"))
    inside = 0
    for _ in range(100):
        s = iv.sample(rng)
        st = replace(hes7.stages[0], a=s["a"][0], b=s["b"][0], c=s["c"][0], beta=s["beta"][0])
        inside += lo <= solve_frequency_heterogeneous(Network((st,))) <= hi
    checks.append((f"bounds contain {inside}/100 interior samples", inside == 100))

    base = solve_frequency(dimensionless(hes7))
    scaled = solve_frequency(dimensionless(hes7.with_stages(c=45.0, beta=0.0825)))
    het = solve_frequency_heterogeneous(hes7.with_stages(c=0.45, beta=8.25))
    checks.append(("production rates leave omega unchanged",
                   abs(scaled - base) <= 1e-12 * base and abs(het - base) <= 1e-9 * base))
    criterion(10, checks)
