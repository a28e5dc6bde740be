import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from marginlab.classes import (ClassSpec, barron_constants, estimate_schwartz_constant,
                               figure_baseline, fourier_1d, fourier_1d_fast, plan_parameters,
                               profile_eval, rate_exponent, theoretical_rate)
from marginlab.construction import ProductPlateauBump, plateau_bump
from marginlab.errors import ParameterError, PlanningError

# C_d for the d = 2 plateau bump: grid maximum x 1.1, frozen from the implementation
# and cross-checked below against an independent oscillatory quadrature
C_D_2 = 3.3672948278


def test_holder_plan_by_hand():
    p = plan_parameters(ClassSpec.holder(), 2, 4)
    assert p.M_star == pytest.approx(2 ** 2.5 * 2, rel=1e-14)
    assert p.M == 12 and p.m == 6
    assert p.amplitude == Fraction(1, 48)
    assert p.vartheta == Fraction(2, 9)
    assert p.r == pytest.approx(1 / (4 * 2.170357085710339), rel=1e-12)
    assert p.lower_bound == pytest.approx(p.r / 8 ** 3 / 48, rel=1e-14)


def test_convex_plan_by_hand():
    p = plan_parameters(ClassSpec.convex(), 2, 8)
    assert p.M_star == pytest.approx((2 ** 5 * 8) ** (1 / 3), rel=1e-14)
    assert p.M == 8 and p.amplitude == Fraction(1, 256)
    assert p.r == 0.125 and p.C_phi == 4.0
    assert p.K_b0 == 1.0 and p.family.K_theta == 3.0
    assert p.lower_bound == 2.0 ** -20


def test_gamma_below_alpha_rejected():
    with pytest.raises(ParameterError):
        ClassSpec.holder(alpha=1.0, gamma=0.5)
    with pytest.raises(ParameterError):
        ClassSpec("barron", 0.5)
    with pytest.raises(ParameterError):
        ClassSpec("spline", 1.0)


@pytest.mark.parametrize("spec", [ClassSpec.holder(), ClassSpec.holder(0.5, 1.0),
                                  ClassSpec.holder(1.0, 2.0), ClassSpec.convex(),
                                  ClassSpec.convex(2.0), ClassSpec.barron(1.0)])
def test_plan_invariants(spec):
    last_M = 0
    for n in (1, 4, 16, 64, 256, 1024):
        p = plan_parameters(spec, 2, n)
        assert p.M % 2 == 0 and p.M >= last_M
        last_M = p.M
        assert float(p.vartheta) <= 0.25 * (1 + 1e-12)
        if isinstance(p.vartheta, Fraction):
            assert p.vartheta <= Fraction(1, 4)
        assert 0 < p.r <= 1
        u = np.random.default_rng(n).uniform(-p.r, p.r, size=(500, p.d - 1))
        assert np.all(p.family.profile(u) >= 0.5)
        rate = theoretical_rate(spec, 2, n)
        assert p.lower_bound >= rate.value


def test_forced_M():
    assert plan_parameters(ClassSpec.holder(), 2, 4, M=24).M == 24
    with pytest.raises(PlanningError):
        plan_parameters(ClassSpec.holder(), 2, 4, M=13)
    with pytest.raises(PlanningError):
        plan_parameters(ClassSpec.holder(), 2, 4, M=10)


def test_three_dimensional_plans():
    for spec in (ClassSpec.holder(), ClassSpec.convex()):
        p = plan_parameters(spec, 3, 64)
        assert p.m == (p.M // 2) ** 2
        assert float(p.vartheta) <= 0.25


def test_profile_eval_examples():
    assert profile_eval("convex", 0.0) == 1.0
    assert profile_eval("convex", 0.5) == 0.0
    assert profile_eval("convex", np.array([0.3, 0.4])) == 0.0
    assert profile_eval("holder", 0.25) == pytest.approx(math.exp(-1 / 3), rel=1e-14)
    assert profile_eval("barron", np.array([0.2, -0.4])) == 1.0


def test_rates_by_hand():
    r = theoretical_rate(ClassSpec.holder(), 2, 4)
    assert r.exponent == -0.5 and r.constant == 2.0 ** -24
    assert r.value == pytest.approx(2.0 ** -25)
    assert theoretical_rate(ClassSpec.convex(), 2, 8).exponent == pytest.approx(-2 / 3)
    assert theoretical_rate(ClassSpec.barron(1.0), 2, 4).exponent == pytest.approx(-0.6)
    exps = [rate_exponent(ClassSpec.barron(1.0, 1.0), d) for d in (2, 10, 1000)]
    assert exps[0] == pytest.approx(-1 / (1 + 2 / 3))
    assert abs(exps[-1] - (-1 / 3)) < abs(exps[0] - (-1 / 3))
    assert exps[-1] == pytest.approx(-1 / 3, abs=2e-3)


def test_fourier_transform_matches_oscillatory_quadrature():
    xi = np.array([0.0, 0.7, 3.1, 12.5, 40.0])
    ours = fourier_1d(plateau_bump, xi, breaks=[0.5, 0.9])
    fast = fourier_1d_fast(plateau_bump, xi)
    for x, a, b in zip(xi, ours, fast):
        # independent route: QAWO cosine-weighted quadrature
        ref = 2 * sum(integrate.quad(plateau_bump, lo, hi, weight="cos",
                                     wvar=2 * math.pi * x, epsabs=1e-13)[0]
                      for lo, hi in ((0, 0.5), (0.5, 0.9), (0.9, 1.0)))
        assert a == pytest.approx(ref, abs=1e-10)
        assert b == pytest.approx(ref, abs=1e-10)


def test_schwartz_constant():
    C_d, C_tilde = barron_constants(2)
    assert C_d == pytest.approx(C_D_2, rel=1e-9)
    assert C_tilde == pytest.approx(2 ** 3.5 * math.pi * C_d * (1 + 3 * math.pi ** 2 / 6),
                                    rel=1e-14)
    # spot checks beyond the grid's interesting range
    for x in (100.0, 100.025, 157.3):
        val = 2 * integrate.quad(plateau_bump, 0.5, 0.9, weight="cos",
                                 wvar=2 * math.pi * x)[0]
        val += 2 * integrate.quad(plateau_bump, 0, 0.5, weight="cos", wvar=2 * math.pi * x)[0]
        assert abs(val) * (1 + x) ** 3 <= C_d


def test_schwartz_constant_of_zero_profile():
    zero = ProductPlateauBump(1, factor=lambda x: np.zeros_like(np.asarray(x, float)),
                              factor_lipschitz=0.0)
    assert estimate_schwartz_constant(zero, 2) == 0.0


def test_barron_baseline_moment_budget():
    spec = ClassSpec.barron(1.0)
    with pytest.raises(ParameterError):
        plan_parameters(spec, 2, 64, baseline=figure_baseline(spec, 2))
    rich = ClassSpec.barron(20.0)
    p = plan_parameters(rich, 2, 64, baseline=figure_baseline(rich, 2))
    assert p.extras["baseline_moment"] <= 10.0


def test_barron_constant_dimension_cap():
    with pytest.raises(PlanningError):
        plan_parameters(ClassSpec.barron(1.0), 4, 16)
