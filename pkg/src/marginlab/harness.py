"""Experiment runner, configuration files and rate fits.

Outputs are deterministic in (config, seed): file contents never include
timestamps, the output directory or the worker count.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .assouad import assouad_bound, check_e_regions, minimax_lower_bound
from .classes import ClassSpec, plan_parameters, rate_exponent, theoretical_rate
from .construction import ThetaVector, validate_construction
from .densities import HardInstance
from .errors import ParameterError
from .learners import empirical_minimax, parse_learner, read_risk_table
from .reports import CheckReport, write_json
from .verification import (check_barron_moment, check_margin, check_normalization,
                           check_pairwise_bounds, check_sampler_chi2)

ALL_CHECKS = ("construction", "normalization", "margin", "pairwise", "eregions",
              "barron", "sampler")
DEFAULT_CHECKS = ("construction", "normalization", "pairwise", "eregions")
# fields that change scheduling or location but never results
_NOT_PROVENANCE = ("out", "workers")


@dataclass
class ExperimentConfig:
    kind: str = "holder"
    d: int = 2
    gamma: float = 1.0
    alpha: float = 1.0
    C: float = 1.0
    n_list: tuple = (16, 64, 256)
    learners: tuple = ("ConstantZero", "HistogramPlugin:8", "KNearest:5", "TubeAwareOracle")
    replicates: int = 20
    mc_samples: int = 20_000
    verify_samples: int = 100_000
    seed: int = 0
    out: str = "results"
    checks: tuple = DEFAULT_CHECKS
    theta_policy: str = "auto"
    subset_size: int = 16
    workers: int = 1
    M: int | None = None

    def __post_init__(self):
        self.n_list = tuple(int(n) for n in self.n_list)
        self.learners = tuple(self.learners)
        self.checks = tuple(self.checks)
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ParameterError("n list must hold positive integers")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ParameterError("n list must be strictly increasing")
        for name in ("replicates", "mc_samples", "verify_samples", "workers"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive")
        if self.mc_samples < 100 or self.verify_samples < 100:
            raise ParameterError("Monte Carlo budgets need at least 100 draws")
        if self.seed < 0 or self.subset_size < 0:
            raise ParameterError("seed and subset_size must be nonnegative")
        unknown = set(self.checks) - set(ALL_CHECKS)
        if unknown:
            raise ParameterError(f"unknown checks {sorted(unknown)}")
        for text in self.learners:
            parse_learner(text)
        self.class_spec()

    def class_spec(self) -> ClassSpec:
        return ClassSpec(self.kind, self.gamma, self.alpha if self.kind == "holder" else 1.0,
                         self.C if self.kind == "barron" else 1.0)

    def provenance(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in _NOT_PROVENANCE}

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Flat ``key = value`` text; lists are comma separated, ``#`` starts a comment."""
        values = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ParameterError(f"config line without '=': {raw!r}")
            values[key.strip().replace("-", "_")] = val.strip()
        return cls.from_strings(values)

    @classmethod
    def from_strings(cls, values: dict) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        for key, val in values.items():
            if key == "class":
                key = "kind"
            if key not in types:
                raise ParameterError(f"unknown config key {key!r}")
            out[key] = _coerce(key, val)
        return cls(**out)


def _coerce(key, val):
    if not isinstance(val, str):
        return val
    try:
        if key in ("n_list",):
            return tuple(int(v) for v in val.split(",") if v.strip())
        if key in ("learners", "checks"):
            return tuple(v.strip() for v in val.split(",") if v.strip())
        if key in ("d", "replicates", "mc_samples", "verify_samples", "seed",
                   "subset_size", "workers"):
            return int(val)
        if key == "M":
            return None if val.lower() in ("", "none") else int(val)
        if key in ("gamma", "alpha", "C"):
            return float(val)
    except ValueError as exc:
        raise ParameterError(f"bad value for {key}: {val!r}") from exc
    return val


# ---------------------------------------------------------------------------
# rate fits


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual_norm: float
    theoretical_exponent: float | None
    n_points: int
    excluded: list = field(default_factory=list)

    @property
    def deviation(self) -> float | None:
        if self.theoretical_exponent is None:
            return None
        return abs(self.slope - self.theoretical_exponent)

    def to_dict(self):
        out = asdict(self)
        out["deviation"] = self.deviation
        return out


def fit_rate(points, theoretical_exponent: float | None = None) -> RateFit:
    """Least squares of log(risk) on log(n); nonpositive risks are dropped and listed."""
    ns, risks, excluded = [], [], []
    for n, r in points:
        if n > 0 and r > 0 and math.isfinite(r):
            ns.append(float(n))
            risks.append(float(r))
        else:
            excluded.append([n, r])
    if len(ns) < 3:
        raise ParameterError(f"rate fit needs 3 positive points, have {len(ns)}")
    x, y = np.log(ns), np.log(risks)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.linalg.norm(y - A @ coef))
    return RateFit(float(coef[0]), float(coef[1]), resid, theoretical_exponent,
                   len(ns), excluded)


def max_risk_of_table(path) -> tuple[int, float]:
    rows = read_risk_table(path)
    if not rows:
        raise ParameterError(f"empty risk table {path}")
    return rows[0]["n"], max(r["mean_risk"] for r in rows)


def fit_rates_in(out_dir) -> dict:
    """Rate fit per learner from the ``risk_*.csv`` tables of a run directory."""
    out_dir = Path(out_dir)
    summary = json.loads((out_dir / "summary.json").read_text())
    exponent = summary.get("rate_exponent")
    by_learner: dict = {}
    for path in sorted(out_dir.glob("risk_*_n*.csv")):
        learner = path.stem[len("risk_"):].rsplit("_n", 1)[0]
        by_learner.setdefault(learner, []).append(max_risk_of_table(path))
    fits = {}
    for learner, pts in sorted(by_learner.items()):
        pts.sort()
        try:
            fits[learner] = {"points": pts, "fit": fit_rate(pts, exponent).to_dict()}
        except ParameterError as exc:
            fits[learner] = {"points": pts, "fit": None, "reason": str(exc)}
    return fits


def plot_rates(fits: dict, path) -> Path:
    """Log-log points and fitted lines as SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for learner, item in fits.items():
        pts = np.array(item["points"], dtype=float)
        ok = pts[:, 1] > 0
        line, = ax.loglog(pts[ok, 0], pts[ok, 1], "o", label=learner)
        if item["fit"]:
            f = item["fit"]
            xs = np.geomspace(pts[:, 0].min(), pts[:, 0].max(), 50)
            ax.loglog(xs, np.exp(f["intercept"]) * xs ** f["slope"], "-",
                      color=line.get_color(), lw=1)
    ax.set_xlabel("n")
    ax.set_ylabel("max risk over theta")
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    plt.rcParams["svg.hashsalt"] = "marginlab"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# ---------------------------------------------------------------------------
# checks


def run_checks(plan, names, seed: int, verify_samples: int) -> dict:
    """Run the named checks on one plan; returns ``{name: [CheckReport, ...]}``."""
    fam, m, n = plan.family, plan.m, plan.n
    zeros, ones = ThetaVector.zeros(m), ThetaVector.ones(m)
    out = {}
    for name in names:
        if name == "construction":
            out[name] = validate_construction(fam, seed=seed).checks
        elif name == "normalization":
            out[name] = [check_normalization(HardInstance(fam, th), N=verify_samples, seed=seed)
                         for th in (zeros, ones)]
        elif name == "margin":
            out[name] = [check_margin(HardInstance(fam, th), N=verify_samples, seed=seed)
                         for th in (zeros, ones)]
        elif name == "pairwise":
            out[name] = check_pairwise_bounds(fam, zeros, ThetaVector.unit(m, 0), n)
        elif name == "eregions":
            out[name] = check_e_regions(fam, seed=seed)
        elif name == "barron":
            if plan.spec.kind != "barron":
                continue
            out[name] = [check_barron_moment(fam, th, plan.spec.C)
                         for th in (zeros, ThetaVector.unit(m, 0), ones)]
        elif name == "sampler":
            if fam.d != 2:
                continue
            out[name] = [check_sampler_chi2(HardInstance(fam, ones), N=verify_samples,
                                            seed=seed)]
        else:
            raise ParameterError(f"unknown check {name!r}")
    return out


def lower_bound_report(table, lower: float, mc_samples: int) -> CheckReport:
    """Worst-vertex risk plus 2 se against the minimax lower bound.

    When every risk draw at the worst vertex is exactly zero and the bound is
    below the rule-of-three resolution ``3 / (N R)``, the Monte Carlo budget
    cannot see the bound and the report is inconclusive rather than failed.
    """
    worst = table.worst
    resolution = 3.0 / (mc_samples * worst.replicates)
    rep = CheckReport(f"lower_bound_{table.learner}", table.max_risk, lower,
                      error=table.max_se, slack=2 * table.max_se, relation="ge",
                      budget=mc_samples, seed=table.seed,
                      details={"thetas": len(table.rows), "argmax_theta": worst.theta,
                               "mc_resolution": resolution})
    if not rep.passed and table.max_risk == 0 and lower < resolution:
        rep.status = "inconclusive"
    return rep


def _failed(reports) -> list[str]:
    return [r.name for r in reports if r.status == "fail"]


# ---------------------------------------------------------------------------
# runner


@dataclass
class RunSummary:
    out_dir: Path
    summary: dict
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 2


def run(config: ExperimentConfig) -> RunSummary:
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = config.class_spec()
    prov = config.provenance()
    learners = [parse_learner(t) for t in config.learners]
    failures: list[str] = []
    per_n = []
    for n in config.n_list:
        plan = plan_parameters(spec, config.d, n, M=config.M)
        write_json(out_dir / f"plan_n{n}.json",
                   {"config": prov, "plan": plan.to_dict(),
                    "assouad_bound": assouad_bound(plan.m, float(plan.vartheta)),
                    "theoretical_rate": theoretical_rate(spec, config.d, n)})
        for name, reports in run_checks(plan, config.checks, config.seed,
                                        config.verify_samples).items():
            write_json(out_dir / f"verify_n{n}_{name}.json",
                       {"config": prov, "n": n, "check": name, "reports": reports})
            failures += [f"n={n}:{name}:{x}" for x in _failed(reports)]
        lower = minimax_lower_bound(plan)
        entry = {"n": n, "M": plan.M, "m": plan.m, "lower_bound": lower, "learners": {}}
        consistency = []
        for spec_l in learners:
            table = empirical_minimax(plan.family, spec_l, n, config.replicates,
                                      config.theta_policy, config.seed, config.mc_samples,
                                      config.workers, config.subset_size)
            table.write_csv(out_dir / f"risk_{spec_l.name}_n{n}.csv",
                            {"config": json.dumps(prov, sort_keys=True)})
            entry["learners"][spec_l.name] = table.to_dict()
            consistency.append(lower_bound_report(table, lower, config.mc_samples))
        write_json(out_dir / f"verify_n{n}_lower_bound.json",
                   {"config": prov, "n": n, "check": "lower_bound", "reports": consistency})
        failures += [f"n={n}:lower_bound:{x}" for x in _failed(consistency)]
        per_n.append(entry)

    exponent = rate_exponent(spec, config.d)
    fits = {}
    if len(config.n_list) >= 3:
        for spec_l in learners:
            pts = [(e["n"], e["learners"][spec_l.name]["max_risk"]) for e in per_n]
            try:
                fits[spec_l.name] = fit_rate(pts, exponent).to_dict()
            except ParameterError as exc:
                fits[spec_l.name] = {"error": str(exc)}
    summary = {"config": prov, "rate_exponent": exponent, "results": per_n,
               "rate_fits": fits, "failures": failures, "passed": not failures}
    write_json(out_dir / "summary.json", summary)
    return RunSummary(out_dir, summary, failures)
