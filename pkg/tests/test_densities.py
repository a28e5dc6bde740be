import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from marginlab.assouad import build_e_regions, region_probes
from marginlab.classes import ClassSpec, plan_parameters
from marginlab.construction import ThetaVector
from marginlab.densities import (HardInstance, LabeledSample, RegionTag, density_eval,
                                 normalizer_bracket, normalizing_constant, region_of,
                                 sample_labeled)
from marginlab.errors import ParameterError
from marginlab.geometry import classify
from marginlab.verification import check_sampler_chi2, quad_mass


@pytest.fixture(scope="module")
def holder_gt2():
    return plan_parameters(ClassSpec.holder(1.0, 2.0), 2, 64)


def _formula(inst, x):
    """Density written out from the region definitions, independent of the class code."""
    fam, C, gt = inst.family, inst.C, inst.gamma_tilde
    z, xd = x[:, :-1], x[:, -1]
    b0 = fam.baseline(z)
    p = np.zeros(len(x))
    for j in range(fam.m):
        if inst.theta.bits[j]:
            p += C * fam.local_bump(j, z)
    t = xd - b0 - p
    tube = np.abs(t) <= C + p
    shoulder = ~tube & (b0 + C + 2 * p < xd) & (xd <= b0 + 3 * C)
    tube_val = 0.5 * np.abs(t) ** (gt - 1) if gt != 1 else np.full(len(x), 0.5)
    sh_val = 0.5 * (C - p) ** (gt - 1) if gt != 1 else np.full(len(x), 0.5)
    return np.where(tube, tube_val, np.where(shoulder, sh_val, inst.normalizer)), tube, shoulder


def test_region_examples(holder4):
    fam = holder4.family
    inst = HardInstance(fam, ThetaVector.ones(fam.m))
    z = 0.31
    b = float(fam.b_theta(inst.theta, np.array([[z]]))[0])
    assert region_of(inst, np.array([z, b])) is RegionTag.TUBE
    edge = 0.0  # face of a cell: the bump vanishes so p < C
    assert region_of(inst, np.array([edge, 0.5 + 3 * fam.C])) is RegionTag.SHOULDER
    assert region_of(inst, np.array([z, 0.0])) is RegionTag.OUTSIDE


def test_density_examples(holder4, holder_gt2):
    fam = holder4.family
    inst = HardInstance(fam, ThetaVector.ones(fam.m))
    x = np.random.default_rng(0).random((5000, 2))
    tags = inst.region_of(x)
    vals = density_eval(inst, x)
    assert np.all(vals[tags != RegionTag.OUTSIDE] == 0.5)
    assert np.all(vals[tags == RegionTag.OUTSIDE] == inst.normalizer)

    fam2 = holder_gt2.family
    inst2 = HardInstance(fam2, ThetaVector.ones(fam2.m))
    z = np.array([[0.37]])
    b = float(fam2.b_theta(inst2.theta, z)[0])
    assert inst2.density(np.array([0.37, b + fam2.C / 2])) == pytest.approx(fam2.C / 4, rel=1e-12)


def test_region_partition_and_formula(holder4, holder_gt2, convex8):
    for plan in (holder4, holder_gt2, convex8):
        fam = plan.family
        rng = np.random.default_rng(7)
        inst = HardInstance(fam, ThetaVector.random(fam.m, rng))
        x = rng.random((100_000, 2))
        expect, tube, shoulder = _formula(inst, x)
        tags = inst.region_of(x)
        assert np.array_equal(tags == RegionTag.TUBE, tube)
        assert np.array_equal(tags == RegionTag.SHOULDER, shoulder)
        assert not np.any(tube & shoulder)
        got = inst.density(x)
        assert np.allclose(got, expect, rtol=1e-12, atol=1e-14)
        assert np.all(got[tags != RegionTag.OUTSIDE] <= 0.5)


def test_shoulder_is_band_minus_tube(holder_gt2):
    fam = holder_gt2.family
    rng = np.random.default_rng(3)
    inst = HardInstance(fam, ThetaVector.random(fam.m, rng))
    z = rng.random((20000, 1))
    b0 = fam.baseline(z)
    xd = b0 - 1.5 * fam.C + 5 * fam.C * rng.random(20000)
    x = np.column_stack([z, xd])
    tags = inst.region_of(x)
    band = (xd >= b0 - fam.C) & (xd <= b0 + 3 * fam.C)
    assert np.array_equal(tags == RegionTag.SHOULDER, band & (tags != RegionTag.TUBE))
    assert np.all(band[tags == RegionTag.TUBE])


def test_normaliser_closed_form_gamma_one(holder4):
    fam = holder4.family
    rng = np.random.default_rng(1)
    for _ in range(10):
        inst = HardInstance(fam, ThetaVector.random(fam.m, rng))
        assert normalizing_constant(inst) == pytest.approx(23 / 22, abs=1e-12)
        assert inst.p_out == pytest.approx(inst.normalizer * (1 - 4 * fam.C), rel=1e-14)
        assert inst.p_R + inst.p_out == pytest.approx(1.0, abs=1e-15)


def test_normaliser_all_zeros_any_gamma(holder_gt2):
    for plan in (holder_gt2, plan_parameters(ClassSpec.holder(0.8, 1.2), 2, 16)):
        fam = plan.family
        C, gt = fam.C, fam.gamma_tilde
        inst = HardInstance(fam, ThetaVector.zeros(fam.m))
        mass_R = C ** gt * (1 + 1 / gt)
        assert inst.p_R == pytest.approx(mass_R, rel=1e-13)
        assert inst.normalizer == pytest.approx((1 - mass_R) / (1 - 4 * C), rel=1e-13)


def test_normaliser_bracket_and_quadrature(holder_gt2):
    fam = holder_gt2.family
    lo, hi = normalizer_bracket(fam.C)
    rng = np.random.default_rng(5)
    for _ in range(5):
        inst = HardInstance(fam, ThetaVector.random(fam.m, rng))
        assert lo <= inst.normalizer <= hi
        mass, err = quad_mass(inst)
        assert abs(mass - 1) <= 1e-8


def test_sampler_marginal_is_uniform_on_band(holder4):
    fam = holder4.family
    inst = HardInstance(fam, ThetaVector.zeros(fam.m))
    x = inst.sample(40_000, np.random.default_rng(11))
    C = fam.C
    xd = x[:, 1]
    inside = xd[(xd >= 0.5 - C) & (xd <= 0.5 + 3 * C)]
    res = stats.kstest(inside, stats.uniform(loc=0.5 - C, scale=4 * C).cdf)
    assert res.pvalue > 1e-3


def test_sampler_outside_frequency(holder_gt2):
    fam = holder_gt2.family
    inst = HardInstance(fam, ThetaVector.ones(fam.m))
    N = 100_000
    x = inst.sample(N, np.random.default_rng(2))
    freq = np.mean(inst.region_of(x) == RegionTag.OUTSIDE)
    se = math.sqrt(inst.p_out * (1 - inst.p_out) / N)
    assert abs(freq - inst.p_out) <= 3 * se


@pytest.mark.parametrize("spec, n", [(ClassSpec.holder(1.0, 2.0), 64),
                                     (ClassSpec.convex(1.5), 16),
                                     (ClassSpec.holder(), 16)])
def test_sampler_chi_square(spec, n):
    fam = plan_parameters(spec, 2, n).family
    inst = HardInstance(fam, ThetaVector.ones(fam.m))
    assert check_sampler_chi2(inst, N=100_000, seed=4).passed


def test_sample_labeled_is_noiseless_and_reproducible(holder4):
    fam = holder4.family
    inst = HardInstance(fam, ThetaVector.random(fam.m, np.random.default_rng(0)))
    s1 = sample_labeled(inst, 500, np.random.default_rng(9))
    s2 = sample_labeled(inst, 500, np.random.default_rng(9))
    assert np.array_equal(s1.points, s2.points)
    assert np.array_equal(s1.labels, classify(inst.horizon, s1.points))
    with pytest.raises(ParameterError):
        sample_labeled(inst, 0, np.random.default_rng(0))


def test_labels_on_e_regions_separate_extreme_thetas(holder4):
    fam = holder4.family
    zeros = HardInstance(fam, ThetaVector.zeros(fam.m))
    ones = HardInstance(fam, ThetaVector.ones(fam.m))
    for reg in build_e_regions(fam):
        pts = region_probes(fam, reg, 200, np.random.default_rng(reg.j))
        assert np.all(zeros.labels(pts) == 1)
        assert np.all(ones.labels(pts) == 0)


def test_csv_roundtrip_is_exact(tmp_path, holder4):
    fam = holder4.family
    inst = HardInstance(fam, ThetaVector.ones(fam.m))
    s = sample_labeled(inst, 200, np.random.default_rng(0), {"seed": 0})
    path = s.write_csv(tmp_path / "s.csv", {"theta": str(inst.theta)})
    text = path.read_text().splitlines()
    assert text[0].startswith("# ") and "x1,x2,y" in text
    back = LabeledSample.read_csv(path)
    assert np.array_equal(back.points, s.points)
    assert np.array_equal(back.labels, s.labels)
    assert back.provenance["theta"] == str(inst.theta)


def test_joint_density_is_zero_off_the_label(holder4):
    fam = holder4.family
    inst = HardInstance(fam, ThetaVector.ones(fam.m))
    x = np.random.default_rng(0).random((100, 2))
    h = inst.labels(x)
    assert np.all(inst.joint_density(x, 1 - h) == 0)
    assert np.allclose(inst.joint_density(x, h), inst.density(x) / 0.5)


def test_three_dimensional_instance():
    fam = plan_parameters(ClassSpec.holder(), 3, 16).family
    inst = HardInstance(fam, ThetaVector.ones(fam.m))
    x = inst.sample(1000, np.random.default_rng(0))
    assert x.shape == (1000, 3) and np.all((x >= 0) & (x <= 1))
    assert inst.normalizer == pytest.approx(float((1 - 2 * Fraction(fam.amplitude))
                                                  / (1 - 4 * Fraction(fam.amplitude))))
