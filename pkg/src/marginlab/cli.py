"""Command line entry point.

Exit codes: 0 success, 2 check failure, 3 parameter or planning error,
4 numeric or consistency error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .assouad import assouad_bound, minimax_lower_bound
from .classes import ClassSpec, plan_parameters, theoretical_rate
from .construction import ThetaVector
from .densities import HardInstance, sample_labeled
from .errors import ConsistencyError, NumericError, ParameterError, PlanningError
from .harness import (ALL_CHECKS, DEFAULT_CHECKS, ExperimentConfig, fit_rates_in,
                      plot_rates, run, run_checks)
from .reports import dumps, jsonable
from .rng import substream


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _add_class_args(p, n=True):
    p.add_argument("--class", dest="kind", choices=["holder", "barron", "convex"],
                   default="holder")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--C", type=float, default=1.0, help="Barron budget")
    p.add_argument("--M", type=int, default=None, help="force an even grid size")
    if n:
        p.add_argument("--n", type=int, default=64)


def _spec(args) -> ClassSpec:
    return ClassSpec(args.kind, args.gamma, args.alpha if args.kind == "holder" else 1.0,
                     args.C if args.kind == "barron" else 1.0)


def _plan(args):
    return plan_parameters(_spec(args), args.d, args.n, M=args.M)


def _thetas(text: str | None, m: int, seed: int) -> list[ThetaVector]:
    """Bit string, ``zeros``, ``ones`` or ``random:<count>``; comma lists allowed."""
    if not text:
        return [ThetaVector.zeros(m)]
    out = []
    for part in text.split(","):
        part = part.strip()
        if part == "zeros":
            out.append(ThetaVector.zeros(m))
        elif part == "ones":
            out.append(ThetaVector.ones(m))
        elif part.startswith("random:"):
            try:
                count = int(part.split(":", 1)[1])
            except ValueError as exc:
                raise ParameterError(f"bad theta spec {part!r}") from exc
            rng = substream(seed, "cli-theta")
            out += [ThetaVector.random(m, rng) for _ in range(count)]
        else:
            th = ThetaVector.from_string(part)
            if th.m != m:
                raise ParameterError(f"theta has {th.m} bits, plan needs {m}")
            out.append(th)
    return out


def _emit(obj, out):
    text = dumps(obj)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_plan(args):
    plan = _plan(args)
    _emit({"plan": plan.to_dict(), "theoretical_rate": theoretical_rate(plan.spec, plan.d, plan.n)},
          args.out)
    return 0


def cmd_bound(args):
    plan = _plan(args)
    _emit({"class_spec": plan.spec.to_dict(), "d": plan.d, "n": plan.n, "M": plan.M,
           "m": plan.m, "vartheta": plan.vartheta,
           "assouad_bound": assouad_bound(plan.m, float(plan.vartheta)),
           "minimax_lower_bound": minimax_lower_bound(plan),
           "theoretical_rate": theoretical_rate(plan.spec, plan.d, plan.n)}, args.out)
    return 0


def cmd_instance(args):
    plan = _plan(args)
    insts = [HardInstance(plan.family, th).descriptor()
             for th in _thetas(args.theta, plan.m, args.seed)]
    _emit(insts[0] if len(insts) == 1 else insts, args.out)
    return 0


def cmd_sample(args):
    plan = _plan(args)
    th = _thetas(args.theta, plan.m, args.seed)[0]
    inst = HardInstance(plan.family, th)
    size = args.size or plan.n
    prov = {"seed": args.seed, "size": size, "descriptor": json.dumps(jsonable(inst.descriptor()), sort_keys=True)}
    sample = sample_labeled(inst, size, substream(args.seed, "cli-sample", th.index), prov)
    if args.out:
        sample.write_csv(args.out)
    else:
        for key in sorted(prov):
            sys.stdout.write(f"# {key}: {prov[key]}\n")
        sys.stdout.write(",".join([f"x{i + 1}" for i in range(sample.d)] + ["y"]) + "\n")
        for row, y in zip(sample.points, sample.labels):
            sys.stdout.write(",".join(format(v, ".17g") for v in row) + f",{int(y)}\n")
    return 0


def cmd_verify(args):
    plan = _plan(args)
    names = [c.strip() for c in args.checks.split(",") if c.strip()]
    for name in names:
        if name not in ALL_CHECKS:
            raise ParameterError(f"unknown check {name!r}")
    results = run_checks(plan, names, args.seed, args.mc_samples)
    _emit({"plan": plan.to_dict(), "seed": args.seed, "checks": results}, args.out)
    failed = any(r.status == "fail" for reps in results.values() for r in reps)
    return 2 if failed else 0


def cmd_experiment(args):
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
        overrides = {k: v for k, v in (("out", args.out), ("workers", args.workers)) if v}
        if overrides:
            cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
    else:
        n_list = [int(v) for v in args.n_list.split(",")] if args.n_list else [args.n]
        cfg = ExperimentConfig(
            kind=args.kind, d=args.d, gamma=args.gamma, alpha=args.alpha, C=args.C,
            n_list=n_list, learners=args.learner or ExperimentConfig.learners,
            replicates=args.replicates, mc_samples=args.mc_samples,
            verify_samples=args.verify_samples, seed=args.seed, out=args.out or "results",
            checks=[c for c in args.checks.split(",") if c], theta_policy=args.theta_policy,
            subset_size=args.subset_size, workers=args.workers or 1, M=args.M)
    result = run(cfg)
    print(f"wrote {result.out_dir}; {'all checks passed' if result.passed else 'FAILED: ' + ', '.join(result.failures)}")
    return result.exit_code


def cmd_rates(args):
    fits = fit_rates_in(args.dir)
    _emit(fits, args.out)
    if args.plot:
        plot_rates(fits, args.plot)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="marginlab", description="Hard-instance laboratory for margin-based "
                                              "classification lower bounds.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, helptext in (("plan", cmd_plan, "grid size, amplitude and constants"),
                               ("bound", cmd_bound, "hypercube and minimax lower bounds")):
        s = sub.add_parser(name, help=helptext)
        _add_class_args(s)
        s.add_argument("--out")
        s.set_defaults(func=fn)

    s = sub.add_parser("instance", help="describe hard instances")
    _add_class_args(s)
    s.add_argument("--theta")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_instance)

    s = sub.add_parser("sample", help="draw a labelled sample as CSV")
    _add_class_args(s)
    s.add_argument("--theta")
    s.add_argument("--size", type=int, default=None, help="sample size (default n)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("verify", help="run numerical checks on one plan")
    _add_class_args(s)
    s.add_argument("--checks", default=",".join(DEFAULT_CHECKS))
    s.add_argument("--mc-samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("experiment", help="plan, verify and benchmark learners over n")
    _add_class_args(s)
    s.add_argument("--config", help="flat key = value file")
    s.add_argument("--n-list")
    s.add_argument("--learner", action="append")
    s.add_argument("--replicates", type=int, default=20)
    s.add_argument("--mc-samples", type=int, default=20_000)
    s.add_argument("--verify-samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--checks", default=",".join(DEFAULT_CHECKS))
    s.add_argument("--theta-policy", choices=["auto", "all", "subset"], default="auto")
    s.add_argument("--subset-size", type=int, default=16)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("rates", help="fit log-log rates from an experiment directory")
    s.add_argument("dir")
    s.add_argument("--plot", help="write an SVG of the fits")
    s.add_argument("--out")
    s.set_defaults(func=cmd_rates)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (ParameterError, PlanningError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, ConsistencyError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
