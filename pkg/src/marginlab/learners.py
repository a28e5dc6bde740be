"""Baseline learners and Monte Carlo risk against hard instances.

A learner maps a labelled sample to a predictor ``x -> [0, 1]``. The roster
minimum over learners stands in for the infimum over all algorithms; only the
direction "no learner beats the lower bound" is checkable.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .assouad import project_estimator, risk_per_hamming
from .construction import PerturbedFamily, ThetaVector
from .densities import HardInstance, LabeledSample, sample_labeled
from .errors import NumericError, ParameterError, PlanningError
from .geometry import classify
from .reports import CheckReport
from .rng import substream

MAX_ENUMERATE = 4096
RISK_COLUMNS = ["learner", "theta_index", "n", "replicates", "mean_risk", "se"]


# ---------------------------------------------------------------------------
# learner specs


@dataclass(frozen=True)
class ConstantZero:
    needs_sample = False

    @property
    def name(self) -> str:
        return "ConstantZero"

    def fit(self, sample, family=None):
        return _Constant(0.0)


@dataclass(frozen=True)
class HistogramPlugin:
    """Majority vote on a regular grid of ``cells_per_axis^d`` boxes."""

    cells_per_axis: int = 8
    needs_sample = True

    def __post_init__(self):
        if int(self.cells_per_axis) != self.cells_per_axis or self.cells_per_axis < 1:
            raise ParameterError("cells_per_axis must be a positive integer")

    @property
    def name(self) -> str:
        return f"HistogramPlugin{self.cells_per_axis}"

    def fit(self, sample: LabeledSample, family=None):
        _require_sample(sample)
        q, d = self.cells_per_axis, sample.d
        idx = _cell_index(sample.points, q)
        total = np.bincount(idx, minlength=q ** d)
        ones = np.bincount(idx, weights=sample.labels.astype(float), minlength=q ** d)
        table = (2 * ones > total).astype(float)   # ties and empty cells give 0
        return _Histogram(q, table)


@dataclass(frozen=True)
class KNearest:
    """Majority of the ``k`` nearest sample points; ties give 0."""

    k: int = 5
    needs_sample = True

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError("k must be a positive integer")

    @property
    def name(self) -> str:
        return f"KNearest{self.k}"

    def fit(self, sample: LabeledSample, family=None):
        _require_sample(sample)
        return _Neighbours(sample.points, sample.labels, min(self.k, sample.n))


@dataclass(frozen=True)
class TubeAwareOracle:
    """Construction-aware: knows the family, estimates theta from labels.

    Bit ``j`` is set when some point above the baseline inside the support
    of bump ``j`` carries label 0, which only an active bump can produce.
    Not a fair learner; it shows how close the rate can be approached.
    """

    needs_sample = True

    @property
    def name(self) -> str:
        return "TubeAwareOracle"

    def fit(self, sample: LabeledSample, family: PerturbedFamily | None = None):
        _require_sample(sample)
        if family is None:
            raise ParameterError("TubeAwareOracle needs the family")
        return _Horizon(family.horizon(estimate_theta(sample, family)))


def estimate_theta(sample: LabeledSample, family: PerturbedFamily) -> ThetaVector:
    z, xd = sample.points[:, :-1], sample.points[:, -1]
    j, u = family.partition.locate(z)
    inside = family.profile(u) > 0
    flag = inside & (sample.labels == 0) & (xd >= family.baseline(z))
    bits = np.zeros(family.m, dtype=int)
    bits[np.unique(j[flag])] = 1
    return ThetaVector(tuple(int(b) for b in bits))


LearnerSpec = ConstantZero | HistogramPlugin | KNearest | TubeAwareOracle


def parse_learner(text: str) -> LearnerSpec:
    """``ConstantZero``, ``HistogramPlugin[:q]``, ``KNearest[:k]``, ``TubeAwareOracle``."""
    name, _, arg = text.strip().partition(":")
    key = name.lower()
    try:
        if key in ("constantzero", "zero"):
            return ConstantZero()
        if key in ("histogramplugin", "histogram"):
            return HistogramPlugin(int(arg)) if arg else HistogramPlugin()
        if key in ("knearest", "knn"):
            return KNearest(int(arg)) if arg else KNearest()
        if key in ("tubeawareoracle", "oracle"):
            return TubeAwareOracle()
    except ValueError as exc:
        raise ParameterError(f"bad learner argument in {text!r}") from exc
    raise ParameterError(f"unknown learner {text!r}")


def default_roster() -> list:
    return [ConstantZero(), HistogramPlugin(8), KNearest(5), TubeAwareOracle()]


def fit(spec, sample: LabeledSample | None, family: PerturbedFamily | None = None):
    if sample is None:
        if spec.needs_sample:
            raise ParameterError(f"{spec.name} needs a nonempty sample")
    return spec.fit(sample, family)


def _require_sample(sample):
    if sample is None or sample.n == 0:
        raise ParameterError("learner needs a nonempty sample")


def _cell_index(x, q: int) -> np.ndarray:
    k = np.clip(np.floor(np.asarray(x) * q).astype(np.int64), 0, q - 1)
    return np.ravel_multi_index(tuple(k.T), (q,) * k.shape[1])


# ---------------------------------------------------------------------------
# fitted predictors (module level so they pickle)


@dataclass
class _Constant:
    value: float

    def __call__(self, x):
        return np.full(len(np.atleast_2d(x)), self.value)


@dataclass
class _Histogram:
    q: int
    table: np.ndarray

    def __call__(self, x):
        return self.table[_cell_index(np.atleast_2d(x), self.q)]


class _Neighbours:
    def __init__(self, points, labels, k):
        self.tree = cKDTree(points)
        self.labels = np.asarray(labels, dtype=float)
        self.k = k

    def __call__(self, x):
        _, idx = self.tree.query(np.atleast_2d(x), k=self.k)
        idx = idx.reshape(len(idx), -1)
        return (2 * self.labels[idx].sum(axis=1) > self.k).astype(float)


@dataclass
class _Horizon:
    horizon: object

    def __call__(self, x):
        return np.asarray(classify(self.horizon, np.atleast_2d(x)), dtype=float)


# ---------------------------------------------------------------------------
# risk


def risk(predictor, instance: HardInstance, N: int, rng: np.random.Generator):
    """Monte Carlo ``E (predictor(x) - h_theta(x))^2`` with its standard error."""
    if N < 100:
        raise ParameterError("Monte Carlo needs at least 100 draws")
    x = instance.sample(N, rng)
    p = np.asarray(predictor(x), dtype=float)
    if not np.all(np.isfinite(p)):
        raise NumericError("predictor returned non-finite values")
    sq = (p - instance.labels(x)) ** 2
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(N))


def projection_chain(predictor, instance: HardInstance, N: int,
                     rng: np.random.Generator) -> CheckReport:
    """Risk against the Hamming error of the projected estimate, 3 se slack."""
    value, se = risk(predictor, instance, N, rng)
    theta_hat = project_estimator(predictor, instance.family)
    ham = theta_hat.hamming(instance.theta)
    bound = risk_per_hamming(instance.family) * ham
    return CheckReport("projection_chain", value, bound, error=se, slack=3 * se,
                       relation="ge", budget=N,
                       details={"hamming": ham, "theta_hat": str(theta_hat)})


# ---------------------------------------------------------------------------
# empirical minimax


@dataclass
class RiskReport:
    learner: str
    theta: str
    theta_index: int
    n: int
    replicates: int
    mean_risk: float
    se: float
    risks: tuple
    seed: int

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class MinimaxTable:
    learner: str
    n: int
    rows: list
    seed: int
    policy: str
    provenance: dict = field(default_factory=dict)

    @property
    def worst(self) -> RiskReport:
        # first maximum in row order so the choice is deterministic
        return max(self.rows, key=lambda r: r.mean_risk)

    @property
    def max_risk(self) -> float:
        return self.worst.mean_risk

    @property
    def max_se(self) -> float:
        return self.worst.se

    def to_dict(self):
        return {"learner": self.learner, "n": self.n, "seed": self.seed,
                "policy": self.policy, "max_risk": self.max_risk, "max_se": self.max_se,
                "argmax_theta": self.worst.theta, "thetas": len(self.rows)}

    def write_csv(self, path, comments: dict | None = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta = {**self.provenance, **(comments or {})}
        with path.open("w", newline="") as fh:
            for key in sorted(meta):
                fh.write(f"# {key}: {meta[key]}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RISK_COLUMNS)
            for r in self.rows:
                w.writerow([r.learner, r.theta_index, r.n, r.replicates,
                            format(r.mean_risk, ".17g"), format(r.se, ".17g")])
        return path


def read_risk_table(path) -> list[dict]:
    with Path(path).open() as fh:
        body = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(body))
    for r in rows:
        r["theta_index"] = int(r["theta_index"])
        r["n"] = int(r["n"])
        r["replicates"] = int(r["replicates"])
        r["mean_risk"] = float(r["mean_risk"])
        r["se"] = float(r["se"])
    return rows


def select_thetas(m: int, policy: str = "auto", seed: int = 0,
                  subset_size: int = 16) -> list[ThetaVector]:
    """Vertices to evaluate.

    ``all`` enumerates every vertex (at most 4096), ``subset`` takes zeros,
    ones and ``subset_size`` random distinct vertices, ``auto`` picks ``all``
    when it fits and ``subset`` otherwise.
    """
    if policy == "auto":
        policy = "all" if 2 ** m <= MAX_ENUMERATE else "subset"
    if policy == "all":
        if 2 ** m > MAX_ENUMERATE:
            limit = int(math.log2(MAX_ENUMERATE))
            raise PlanningError(f"2^{m} vertices exceed the enumeration budget; "
                                f"use m <= {limit} or the subset policy")
        return [ThetaVector.from_index(i, m) for i in range(2 ** m)]
    if policy != "subset":
        raise ParameterError(f"unknown theta policy {policy!r}")
    if subset_size < 0:
        raise ParameterError("subset_size must be nonnegative")
    chosen = {0: ThetaVector.zeros(m), 2 ** m - 1: ThetaVector.ones(m)}
    rng = substream(seed, "theta-subset", m)
    target = min(2 ** m, len(chosen) + subset_size)
    while len(chosen) < target:
        th = ThetaVector.random(m, rng)
        chosen.setdefault(th.index, th)
    return list(chosen.values())


def _job(args):
    family, spec, bits, rep, n, mc_samples, seed = args
    theta = ThetaVector(bits)
    inst = HardInstance(family, theta)
    sample = sample_labeled(inst, n, substream(seed, "sample", theta.index, rep))
    pred = fit(spec, sample, family)
    value, _ = risk(pred, inst, mc_samples, substream(seed, "risk", theta.index, rep))
    return value


def empirical_minimax(family: PerturbedFamily, spec, n: int, replicates: int = 20,
                      theta_policy="auto", seed: int = 0, mc_samples: int = 100_000,
                      workers: int = 1, subset_size: int = 16) -> MinimaxTable:
    """Per-vertex mean risk over ``replicates`` fresh samples and the worst vertex.

    ``theta_policy`` is a policy name or an explicit list of ThetaVectors.
    Each (theta, replicate) job draws from its own substream, so the table
    does not depend on ``workers``.
    """
    if replicates < 1 or n < 1:
        raise ParameterError("replicates and n must be positive")
    if isinstance(theta_policy, str):
        thetas = select_thetas(family.m, theta_policy, seed, subset_size)
        policy = theta_policy
    else:
        thetas = list(theta_policy)
        for th in thetas:
            family.check_theta(th)
        policy = "explicit"
    jobs = [(family, spec, th.bits, rep, n, mc_samples, seed)
            for th in thetas for rep in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        values = [_job(j) for j in jobs]
    rows = []
    for i, th in enumerate(thetas):
        risks = np.array(values[i * replicates:(i + 1) * replicates])
        se = float(risks.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
        rows.append(RiskReport(spec.name, str(th), th.index, n, replicates,
                               float(risks.mean()), se, tuple(float(v) for v in risks), seed))
    prov = {"learner": spec.name, "n": n, "replicates": replicates, "seed": seed,
            "mc_samples": mc_samples, "theta_policy": policy}
    return MinimaxTable(spec.name, n, rows, seed, policy, prov)
