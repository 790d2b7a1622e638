import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cyclicosc.model import (
    DimensionlessParams,
    GeneStage,
    HeterogeneousRatesError,
    HillNonlinearity,
    ModelError,
    Network,
    Regulation,
    classify,
    dimensionless,
    hill,
)

R, A = Regulation.REPRESSION, Regulation.ACTIVATION


def ring(*regs):
    return Network(tuple(GeneStage(1.0, 0.5, 1.0, 1.0, regulation=r) for r in regs))


@pytest.mark.parametrize(
    "regs, expected",
    [((R, R, R), -1), ((R, R, A, R, A), -1), ((A, R), -1), ((A, A), 1), ((R,), -1), ((R, R), 1)],
)
def test_classify(regs, expected):
    assert classify(ring(*regs)) == expected


def test_classify_rotation_invariant():
    net = ring(R, R, A, R, A)
    for k in range(5):
        assert classify(net.rotated(k)) == classify(net)


@pytest.mark.parametrize("p, nu, reg, expected", [(1, 2, R, 0.5), (0, 2, A, 0.0), (2, 2, R, 0.2)])
def test_hill_values(p, nu, reg, expected):
    assert hill(p, nu, reg) == pytest.approx(expected, abs=1e-15)


def test_hill_rejects_negative():
    with pytest.raises(ModelError):
        hill(-0.1, 2, R)


@given(st.floats(0, 1e3), st.floats(0.1, 8))
def test_hill_complementary_and_bounded(p, nu):
    fr, fa = hill(p, nu, R), hill(p, nu, A)
    assert 0 <= fr <= 1 and 0 <= fa <= 1
    assert fr + fa == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0, 50), st.floats(1e-3, 5), st.floats(0.2, 6))
def test_hill_monotone(p, dp, nu):
    lo, hi = p, p + dp
    assert hill(hi, nu, R) <= hill(lo, nu, R)
    assert hill(hi, nu, A) >= hill(lo, nu, A)


def test_hill_derivative_matches_finite_difference():
    f = HillNonlinearity(2.5, R)
    p, h = 1.3, 1e-6
    assert f.derivative(p) == pytest.approx((f(p + h) - f(p - h)) / (2 * h), rel=1e-8)


@pytest.mark.parametrize(
    "kw", [dict(a=0), dict(b=-1), dict(c=0), dict(beta=0), dict(tau_r=-1), dict(tau_p=-0.1), dict(nu=0)]
)
def test_gene_stage_validation(kw):
    base = dict(a=1, b=1, c=1, beta=1)
    with pytest.raises(ModelError):
        GeneStage(**{**base, **kw})


def test_empty_network_rejected():
    with pytest.raises(ModelError):
        Network(())


def test_regulation_aliases():
    assert Regulation.parse("A") is A
    assert Regulation.parse("rep") is R
    with pytest.raises(ModelError):
        Regulation.parse("inhibit?")


def test_dimensionless_pentilator(pentilator):
    p = dimensionless(pentilator)
    assert p.Q == pytest.approx(0.575, abs=5e-4)
    assert p.tau == pytest.approx(1.8, abs=1e-12)
    assert p.T_A == pytest.approx(2.75)
    assert p.R_i == pytest.approx(math.sqrt(0.3 * 10 / (2 * 0.2)))


def test_dimensionless_hes7(hes7):
    p = dimensionless(hes7)
    assert p.Q == pytest.approx(0.674, abs=5e-4)
    assert p.T_A == pytest.approx(16.6, abs=0.05)
    assert p.tau == 37.0
    assert p.tau_tilde == pytest.approx(2.23, abs=5e-3)
    assert p.tau_tilde == p.tau / p.T_A


def test_equal_rates_give_unit_Q():
    assert DimensionlessParams.from_rates(3, 0.7, 0.7, 1.0).Q == 1.0


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_Q_in_unit_interval(a, b):
    p = DimensionlessParams.from_rates(2, a, b, 0.0)
    assert 0 < p.Q <= 1
    assert p.T_G <= p.T_A * (1 + 1e-15)


def test_dimensionless_rejects_heterogeneous_rates(pentilator):
    stages = list(pentilator.stages)
    stages[2] = replace(stages[2], a=3.0)
    with pytest.raises(HeterogeneousRatesError):
        dimensionless(Network(tuple(stages)))


def test_homogeneous_constructor_default_regulation():
    odd = Network.homogeneous(3, a=1, b=1, c=1, beta=1)
    even = Network.homogeneous(4, a=1, b=1, c=1, beta=1)
    assert odd.is_negative and even.is_negative
    assert [s.regulation for s in even.stages] == [R, A, R, R]


def test_network_array(pentilator):
    np.testing.assert_array_equal(pentilator.array("tau_r"), [1.8, 1.4, 1.1, 0.7, 1.0])
