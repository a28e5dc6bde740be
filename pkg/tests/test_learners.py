import numpy as np
import pytest

from marginlab.assouad import build_e_regions, minimax_lower_bound, region_probes
from marginlab.construction import ThetaVector
from marginlab.densities import HardInstance, LabeledSample
from marginlab.errors import ParameterError, PlanningError
from marginlab.learners import (RISK_COLUMNS, ConstantZero, HistogramPlugin, KNearest,
                                TubeAwareOracle, default_roster, empirical_minimax,
                                estimate_theta, fit, parse_learner, read_risk_table, risk,
                                select_thetas)
from marginlab.verification import instance_rule


def _label_one_mass(inst):
    pts, w = instance_rule([inst])
    return float(np.dot(w, inst.density(pts) * inst.labels(pts)))


def test_constant_zero(holder4):
    fam = holder4.family
    inst = HardInstance(fam, ThetaVector.ones(fam.m))
    pred = fit(ConstantZero(), None)
    assert np.all(pred(np.random.default_rng(0).random((10, 2))) == 0)
    value, se = risk(pred, inst, 100_000, np.random.default_rng(1))
    assert abs(value - _label_one_mass(inst)) <= 4 * se


def test_histogram_examples():
    ones = LabeledSample(np.random.default_rng(0).random((20, 2)), np.ones(20))
    pred = fit(HistogramPlugin(1), ones)
    assert np.all(pred(np.random.default_rng(1).random((50, 2))) == 1)
    tie = LabeledSample(np.array([[0.1, 0.1], [0.2, 0.2]]), np.array([0, 1]))
    pred = fit(HistogramPlugin(2), tie)
    assert pred(np.array([[0.15, 0.15]]))[0] == 0       # tie
    assert pred(np.array([[0.9, 0.9]]))[0] == 0         # empty cell


def test_knearest_examples():
    s = LabeledSample(np.array([[0.1, 0.5], [0.9, 0.5], [0.5, 0.95]]), np.array([0, 1, 1]))
    pred = fit(KNearest(2), s)
    assert pred(np.array([[0.5, 0.5]]))[0] == 0         # one vote each
    assert pred(np.array([[0.8, 0.8]]))[0] == 1
    big_k = fit(KNearest(10), s)
    assert big_k(np.array([[0.0, 0.0]]))[0] == 1


def test_empty_samples_rejected():
    empty = LabeledSample(np.empty((0, 2)), np.empty(0))
    for spec in (HistogramPlugin(4), KNearest(3)):
        with pytest.raises(ParameterError):
            fit(spec, empty)
        with pytest.raises(ParameterError):
            fit(spec, None)
    with pytest.raises(ParameterError):
        HistogramPlugin(0)
    with pytest.raises(ParameterError):
        KNearest(0)


def test_oracle_recovers_theta_from_e_region_points(holder4):
    fam = holder4.family
    rng = np.random.default_rng(5)
    for _ in range(5):
        th = ThetaVector.random(fam.m, rng)
        inst = HardInstance(fam, th)
        pts = np.vstack([region_probes(fam, reg, 1, rng) for reg in build_e_regions(fam)])
        sample = LabeledSample(pts, inst.labels(pts))
        assert estimate_theta(sample, fam) == th
        value, se = risk(fit(TubeAwareOracle(), sample, fam), inst, 20_000, rng)
        assert value == 0.0 and se == 0.0
    with pytest.raises(ParameterError):
        fit(TubeAwareOracle(), sample)


def test_risk_examples(holder4):
    fam = holder4.family
    inst = HardInstance(fam, ThetaVector.random(fam.m, np.random.default_rng(0)))
    rng = np.random.default_rng(1)
    h = inst.labels
    assert risk(lambda x: h(x).astype(float), inst, 1000, rng) == (0.0, 0.0)
    assert risk(lambda x: 1.0 - h(x), inst, 1000, rng) == (1.0, 0.0)
    assert risk(lambda x: np.full(len(x), 0.5), inst, 1000, rng) == (0.25, 0.0)
    with pytest.raises(ParameterError):
        risk(lambda x: np.zeros(len(x)), inst, 50, rng)


def test_parse_learner():
    assert parse_learner("HistogramPlugin:4") == HistogramPlugin(4)
    assert parse_learner("knn:7") == KNearest(7)
    assert parse_learner("TubeAwareOracle") == TubeAwareOracle()
    assert parse_learner("ConstantZero").name == "ConstantZero"
    for bad in ("forest", "knn:x", "histogram:0"):
        with pytest.raises(ParameterError):
            parse_learner(bad)


def test_theta_policies():
    assert len(select_thetas(3, "auto")) == 8
    assert len(select_thetas(12, "all")) == 4096
    with pytest.raises(PlanningError):
        select_thetas(13, "all")
    sub = select_thetas(40, "auto", seed=3, subset_size=5)
    assert len(sub) == 7 and len({t.index for t in sub}) == 7
    assert sub[0] == ThetaVector.zeros(40) and sub[1] == ThetaVector.ones(40)
    assert [t.bits for t in select_thetas(40, "subset", 3, 5)] == [t.bits for t in sub]
    with pytest.raises(ParameterError):
        select_thetas(4, "sometimes")


def test_empirical_minimax_table(holder4, tmp_path):
    fam = holder4.family
    thetas = select_thetas(fam.m, "subset", 0, 3)
    a = empirical_minimax(fam, KNearest(3), 16, 4, thetas, seed=2, mc_samples=2000)
    b = empirical_minimax(fam, KNearest(3), 16, 4, thetas, seed=2, mc_samples=2000, workers=2)
    assert [r.risks for r in a.rows] == [r.risks for r in b.rows]
    for r in a.rows:
        assert all(0.0 <= v <= 1.0 for v in r.risks)
    assert a.max_risk == max(r.mean_risk for r in a.rows)
    path = a.write_csv(tmp_path / "t.csv")
    header = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")][0]
    assert header.split(",") == RISK_COLUMNS
    rows = read_risk_table(path)
    assert [r["mean_risk"] for r in rows] == [r.mean_risk for r in a.rows]


def test_oracle_risk_vanishes_with_many_samples(holder4):
    fam = holder4.family
    table = empirical_minimax(fam, TubeAwareOracle(), 4000, 3, "auto", seed=0,
                              mc_samples=5000)
    assert len(table.rows) == 2 ** fam.m
    assert table.max_risk <= 1e-3


def test_roster_respects_lower_bound(holder4):
    fam = holder4.family
    lower = minimax_lower_bound(holder4)
    for spec in default_roster():
        table = empirical_minimax(fam, spec, 4, 5, "subset", seed=1, mc_samples=2000,
                                  subset_size=4)
        assert table.max_risk + 2 * table.max_se >= lower
