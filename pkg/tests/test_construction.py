import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from marginlab.construction import (ConstantBaseline, GridPartition, ParaboloidBump,
                                    PerturbedFamily, ProductPlateauBump, QuadraticBaseline,
                                    SupNormBump, ThetaVector, build_partition,
                                    plateau_bump, plateau_bump_derivative,
                                    plateau_bump_lipschitz, standard_bump,
                                    standard_bump_derivative, standard_bump_lipschitz,
                                    validate_construction)
from marginlab.errors import ParameterError
from marginlab.reports import dumps


def convex_family(M=4):
    return PerturbedFamily(GridPartition(2, M), ParaboloidBump(1), QuadraticBaseline(2),
                           Fraction(1, 4 * M * M), 1.0, 1.0, "convex")


def test_partition_d2_m4():
    p = build_partition(2, 4)
    assert p.m == 2 and p.s == 2
    assert p.odd_vectors.tolist() == [[1], [3]]
    assert [c.tolist() for c in p.cell(0)] == [[0.0], [0.5]]
    assert [c.tolist() for c in p.cell(1)] == [[0.5], [1.0]]


def test_partition_d3_lexicographic():
    p = build_partition(3, 4)
    assert p.m == 4
    assert p.odd_vectors.tolist() == [[1, 1], [1, 3], [3, 1], [3, 3]]


def test_partition_single_cell():
    p = build_partition(2, 2)
    assert p.m == 1
    assert [c.tolist() for c in p.cell(0)] == [[0.0], [1.0]]


@pytest.mark.parametrize("M", [3, 0, -2, 2.5])
def test_partition_rejects_bad_M(M):
    with pytest.raises(ParameterError):
        build_partition(2, M)


@settings(max_examples=50, deadline=None)
@given(M=st.sampled_from([2, 4, 6, 12]), z=st.floats(0, 1))
def test_locate_agrees_with_membership(M, z):
    p = build_partition(2, M)
    j, u = p.locate(np.array([[z]]))
    assert p.contains(int(j[0]), np.array([z]))
    assert abs(u[0, 0]) <= 1 + 1e-12


def test_standard_bump_lipschitz_matches_independent_maximiser():
    # oracle: maximise |psi'| with a bounded scalar optimiser
    res = optimize.minimize_scalar(lambda x: standard_bump_derivative(x), bounds=(0.0, 1.0),
                                   method="bounded", options={"xatol": 1e-12})
    assert -res.fun == pytest.approx(2.170357, abs=1e-6)
    assert standard_bump_lipschitz() == pytest.approx(-res.fun, rel=1e-9)


def test_bump_values():
    assert standard_bump(0.0) == 1.0
    assert standard_bump(0.5) == pytest.approx(math.exp(-1 / 3), rel=1e-14)
    assert standard_bump(1.0) == 0.0
    assert plateau_bump(0.3) == 1.0 and plateau_bump(0.95) == 0.0
    assert plateau_bump_lipschitz() == pytest.approx(5.0, rel=1e-6)


def test_plateau_derivative_by_finite_difference():
    x = np.linspace(-0.99, 0.99, 397)
    h = 1e-6
    fd = (plateau_bump(x + h) - plateau_bump(x - h)) / (2 * h)
    assert np.allclose(plateau_bump_derivative(x), fd, atol=1e-5)


@pytest.mark.parametrize("profile", [SupNormBump(1), SupNormBump(2), ParaboloidBump(1),
                                     ParaboloidBump(2), ProductPlateauBump(1),
                                     ProductPlateauBump(2)])
def test_profile_invariants(profile, rng):
    u = rng.uniform(-1.3, 1.3, size=(4000, profile.dim))
    v = profile(u)
    sup = np.max(np.abs(u), axis=1)
    assert float(profile(np.zeros(profile.dim))) == 1.0
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(v[sup >= 1] == 0)
    assert np.all(np.abs(v - 1) <= profile.C_phi * sup ** profile.alpha + 1e-12)


def test_cube_integral_oracles():
    # (1 - 4u^2)_+ integrates to 2/3 over [-1, 1]; on [-r, r] it is 2r - 8r^3/3
    par = ParaboloidBump(1)
    assert par.cube_integral(lambda p: p) == pytest.approx(2 / 3, rel=1e-12)
    assert par.cube_integral(lambda p: p, 0.125) == pytest.approx(0.25 - 8 * 0.125 ** 3 / 3,
                                                                   rel=1e-12)
    disk = ParaboloidBump(2)
    assert disk.cube_integral(lambda p: p) == pytest.approx(math.pi / 8, rel=1e-10)


def test_local_bump_examples():
    fam = convex_family(4)
    assert fam.local_bump(0, np.array([[0.25]]))[0] == 1.0
    assert fam.local_bump(0, np.array([[0.5]]))[0] == 0.0
    assert fam.local_bump(0, np.array([[0.0]]))[0] == 0.0
    assert fam.local_bump(0, np.array([[5 / 16]]))[0] == pytest.approx(0.75, abs=1e-15)
    with pytest.raises(ParameterError):
        fam.local_bump(2, np.array([[0.5]]))


def test_b_theta_examples(holder4):
    fam = holder4.family
    z = np.linspace(0, 1, 101).reshape(-1, 1)
    zeros, ones = ThetaVector.zeros(fam.m), ThetaVector.ones(fam.m)
    assert np.array_equal(fam.b_theta(zeros, z), fam.baseline(z))
    centers = fam.partition.odd_vectors / fam.M
    e2 = ThetaVector.unit(fam.m, 2)
    assert fam.b_theta(e2, centers[2:3])[0] == pytest.approx(0.5 + 1 / 48, abs=1e-15)
    faces = (np.arange(0, fam.M + 1, 2) / fam.M).reshape(-1, 1)
    assert np.array_equal(fam.b_theta(ones, faces), fam.baseline(faces))
    with pytest.raises(ParameterError):
        fam.b_theta(ThetaVector.ones(fam.m + 1), z)


def test_sup_norm_separation(holder4, rng):
    fam = holder4.family
    centers = fam.partition.odd_vectors / fam.M
    z = np.vstack([rng.random((2000, 1)), centers])
    for _ in range(10):
        a, b = ThetaVector.random(fam.m, rng), ThetaVector.random(fam.m, rng)
        gap = np.abs(fam.b_theta(a, z) - fam.b_theta(b, z))
        assert gap.max() <= fam.C + 1e-15
        if a != b:
            assert gap.max() == pytest.approx(fam.C, abs=1e-15)
        assert a.hamming(a) == 0


def test_theta_vector_roundtrips():
    th = ThetaVector.from_string("0110")
    assert th.index == 6 and ThetaVector.from_index(6, 4) == th
    assert str(th) == "0110" and th.active == 2
    with pytest.raises(ParameterError):
        ThetaVector.from_string("012")


def test_descriptor_roundtrip_is_exact(holder4, convex8, barron64):
    for plan in (holder4, convex8, barron64):
        th = ThetaVector.ones(plan.m)
        text = dumps(plan.family.descriptor(th))
        fam, th2 = PerturbedFamily.from_descriptor(json.loads(text))
        assert th2 == th
        assert dumps(fam.descriptor(th2)) == text
        z = np.linspace(0, 1, 257).reshape(-1, 1)
        assert np.array_equal(fam.b_theta(th, z), plan.family.b_theta(th, z))


def test_validate_planned_families(holder4, convex8, barron64):
    for plan in (holder4, convex8, barron64):
        report = validate_construction(plan.family, probes=1024)
        assert report.passed, [c.to_dict() for c in report.checks if not c.passed]


def test_validate_detects_large_amplitude():
    fam = PerturbedFamily(GridPartition(2, 12), SupNormBump(1), ConstantBaseline(2),
                          Fraction(1, 12), 1.0)
    report = validate_construction(fam, probes=256)
    assert not report.by_name("amplitude").passed


def test_validate_detects_baseline_at_zero():
    fam = PerturbedFamily(GridPartition(2, 12), SupNormBump(1), ConstantBaseline(2, 0.0),
                          Fraction(1, 48), 1.0)
    report = validate_construction(fam, probes=256)
    assert not report.by_name("baseline_lower").passed
