"""Command-line entry point.

Subcommands:
    run         evaluate forecasters on a CSV or generated sequence
    bounds      print closed-form bound values for given (d, T, B, lam)
    lowerbound  Monte-Carlo Bayes-risk experiment with van Trees references
    verify      built-in identity/invariant suite; exit 1 on any failure
    bench       time the compiled kernels against the pure-python fallback
"""

import argparse
import csv
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._backend import BACKEND
from .forecasters import ForecasterSpec
from .lowerbound import BayesEnvironment, bayes_risk_estimate, regret_lower_experiment
from .regret import (RegretReport, bound_adapted, bound_adapted_optimized,
                     bound_vaw_uniform, evaluate, lower_bound_value)
from .selfcheck import run_all
from .sequences import FeatureSequence, gen_decaying, gen_gaussian, load_csv

FORECASTER_CHOICES = ("vaw", "adapted", "zeroreg", "mm", "biased-zeroreg")

GENERATORS = ("gaussian", "decaying")


@dataclass(frozen=True)
class ExperimentConfig:
    """One `run` invocation: forecasters, data source, bounds, output."""

    forecasters: tuple[ForecasterSpec, ...]
    source: dict
    B: float | None = None
    X: float | None = None
    use_empirical_x: bool = False
    seed: int = 0
    output: str | None = None
    format: str = "json"

    def __post_init__(self):
        if not self.forecasters:
            raise ValueError("at least one forecaster is required")
        if self.format not in ("json", "csv"):
            raise ValueError(f"unknown output format {self.format!r}")

    def load_sequence(self) -> FeatureSequence:
        src = self.source
        if "csv" in src:
            return load_csv(src["csv"])
        if src["generator"] == "gaussian":
            return gen_gaussian(src["d"], src["T"], scale=src["scale"],
                                seed=self.seed)
        if src["generator"] == "decaying":
            return gen_decaying(src["d"], src["T"], decay=src["decay"],
                                seed=self.seed)
        raise ValueError(f"unknown generator {src['generator']!r}")

    def describe(self) -> dict:
        return {"source": self.source, "seed": self.seed, "B": self.B,
                "X": self.X, "use_empirical_x": self.use_empirical_x,
                "backend": BACKEND}


def _spec_from_name(name: str, lam: float | None) -> ForecasterSpec:
    if name == "vaw":
        if lam is None:
            raise SystemExit("run: --lam is required for the vaw forecaster")
        return ForecasterSpec.vaw(lam)
    if name == "adapted":
        if lam is None:
            raise SystemExit("run: --lam is required for the adapted forecaster")
        return ForecasterSpec.adapted(lam)
    if name == "zeroreg":
        return ForecasterSpec.zeroreg()
    if name == "mm":
        return ForecasterSpec.mm()
    if name == "biased-zeroreg":
        return ForecasterSpec.biased_zeroreg(lam if lam is not None else 1.0)
    raise SystemExit(f"unknown forecaster {name!r}")


def _cmd_run(args) -> int:
    if args.csv is not None:
        source = {"csv": args.csv}
    elif args.gen == "gaussian":
        source = {"generator": "gaussian", "d": args.d, "T": args.T,
                  "scale": args.scale, "seed": args.seed}
    else:
        source = {"generator": "decaying", "d": args.d, "T": args.T,
                  "decay": args.decay, "seed": args.seed}
    config = ExperimentConfig(
        forecasters=tuple(_spec_from_name(n, args.lam) for n in args.forecaster),
        source=source, B=args.B, X=args.X,
        use_empirical_x=args.use_empirical_x, seed=args.seed,
        output=args.output, format=args.format)
    seq = config.load_sequence()

    reports: list[RegretReport] = []
    for name, spec in zip(args.forecaster, config.forecasters):
        report = evaluate(spec, seq, B=config.B, X=config.X,
                          use_empirical_x=config.use_empirical_x)
        report.config = config.describe()
        reports.append(report)
        regret = report.uniform_regret
        status = "pass" if report.all_pass else "FAIL"
        print(f"{name}: regret {regret:.6g}  bounds "
              f"{ {k: round(v, 6) for k, v in report.bounds.items()} }  [{status}]")
        for note in report.inapplicable:
            print(f"  note: {note}")

    if args.output:
        if args.format == "json":
            payload = {"schema": "regretlab/report/v1",
                       "reports": [r.to_dict(include_rounds=not args.no_rounds)
                                   for r in reports]}
            with open(args.output, "w") as fh:
                json.dump(payload, fh, indent=2)
        else:
            _write_report_csv(reports[0], args.output)
            if len(reports) > 1:
                print("csv format writes per-round records of the first "
                      "forecaster only; use json for the full set", file=sys.stderr)
        print(f"wrote {args.output}")
    return 0 if all(r.all_pass for r in reports) else 1


def _write_report_csv(report: RegretReport, path: str) -> None:
    d = report.d
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(d)] + ["y", "yhat", "loss"])
        for r in report.records:
            writer.writerow(["%.17g" % v for v in r.x]
                            + ["%.17g" % r.y, "%.17g" % r.yhat, "%.17g" % r.loss])


def _cmd_bounds(args) -> int:
    r_T = args.rank if args.rank is not None else args.d
    if args.optimized:
        print(f"adapted_optimized {bound_adapted_optimized(r_T, args.T, args.B):.4f}")
    if args.lam is not None:
        print(f"adapted {bound_adapted(args.lam, r_T, args.T, args.B):.4f}")
        if args.X is not None and args.lam_min_pos is not None:
            value = bound_vaw_uniform(args.lam, r_T, args.lam_min_pos,
                                      args.T, args.X, args.B)
            print(f"vaw_uniform {value:.4f}")
    if args.T >= 8:
        print(f"minimax_reference {lower_bound_value(args.d, args.T, args.B):.4f}")
    return 0


def _cmd_lowerbound(args) -> int:
    if args.alpha is not None:
        env = BayesEnvironment(d=args.d, T=args.T, alpha=args.alpha,
                               B=args.B, seed=args.seed)
    else:
        env = BayesEnvironment.with_default_alpha(args.d, args.T, B=args.B,
                                                  seed=args.seed)
    spec = _spec_from_name(args.forecaster, args.lam)
    run = bayes_risk_estimate(spec, env, args.trials)
    print(f"bayes risk over {args.trials} trials (d={env.d}, T={env.T}, "
          f"alpha={env.alpha:.4g}): van Trees floor "
          f"{'holds' if run.holds else 'VIOLATED'}")
    payload = run.to_dict()
    if args.regret:
        res = regret_lower_experiment(env, spec, args.trials)
        print(f"expected uniform regret {res.estimate:.6g} (se {res.se:.3g}) "
              f">= reference {res.reference:.6g}: "
              f"{'holds' if res.holds else 'VIOLATED'}")
        payload["regret_experiment"] = {
            "estimate": res.estimate, "se": res.se,
            "reference": res.reference, "holds": res.holds,
        }
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(payload, fh, indent=2)
        print(f"wrote {args.output}")
    ok = run.holds and (not args.regret or payload["regret_experiment"]["holds"])
    return 0 if ok else 1


def _cmd_verify(args) -> int:
    results = run_all(fast=args.fast)
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed "
          f"(backend: {BACKEND})")
    return 1 if failed else 0


def _cmd_bench(args) -> int:
    from .bench import run_bench
    rows = run_bench(repeat=args.repeat)
    for row in rows:
        print(row)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regretlab",
        description="Online linear regression forecasters, regret bounds, "
                    "and lower-bound experiments.")
    parser.add_argument("--version", action="version",
                        version=f"regretlab {__version__} (backend: {BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evaluate forecasters on a sequence")
    src = p_run.add_mutually_exclusive_group()
    src.add_argument("--csv", help="input CSV with header x1,...,xd,y")
    src.add_argument("--gen", choices=list(GENERATORS), default="gaussian",
                     help="sequence generator (default: gaussian)")
    p_run.add_argument("--d", type=int, default=2)
    p_run.add_argument("--T", type=int, default=100)
    p_run.add_argument("--scale", type=float, default=1.0)
    p_run.add_argument("--decay", type=float, default=0.5,
                       help="norm decay for the decaying generator")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--forecaster", action="append", required=True,
                       choices=FORECASTER_CHOICES,
                       help="repeat to evaluate several forecasters")
    p_run.add_argument("--lam", type=float, default=None,
                       help="regularization weight where applicable")
    p_run.add_argument("--B", type=float, default=None,
                       help="observation bound; defaults to max |y_t|; "
                            "observations beyond it abort the run")
    p_run.add_argument("--X", type=float, default=None,
                       help="feature-norm bound for the uniform ridge bound")
    p_run.add_argument("--use-empirical-x", action="store_true",
                       help="fall back to the empirical max feature norm for X")
    p_run.add_argument("--output", help="report path")
    p_run.add_argument("--format", choices=["json", "csv"], default="json")
    p_run.add_argument("--no-rounds", action="store_true",
                       help="omit per-round records from JSON output")
    p_run.set_defaults(func=_cmd_run)

    p_bounds = sub.add_parser("bounds", help="print closed-form bound values")
    p_bounds.add_argument("--d", type=int, required=True)
    p_bounds.add_argument("--T", type=int, required=True)
    p_bounds.add_argument("--B", type=float, required=True)
    p_bounds.add_argument("--lam", type=float, default=None)
    p_bounds.add_argument("--rank", type=int, default=None,
                          help="final Gram rank (default: d)")
    p_bounds.add_argument("--X", type=float, default=None)
    p_bounds.add_argument("--lam-min-pos", type=float, default=None,
                          help="smallest positive Gram eigenvalue for the "
                               "uniform ridge bound")
    p_bounds.add_argument("--optimized", action="store_true",
                          help="print the bound at the optimizing lam = rank/T")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_lb = sub.add_parser("lowerbound", help="Monte-Carlo Bayes-risk experiment")
    p_lb.add_argument("--d", type=int, default=2)
    p_lb.add_argument("--T", type=int, default=100)
    p_lb.add_argument("--alpha", type=float, default=None,
                      help="Beta prior parameter (default: 1 + ln T)")
    p_lb.add_argument("--B", type=float, default=1.0)
    p_lb.add_argument("--trials", type=int, default=2000)
    p_lb.add_argument("--seed", type=int, default=0)
    p_lb.add_argument("--forecaster", choices=FORECASTER_CHOICES, default="vaw")
    p_lb.add_argument("--lam", type=float, default=1.0)
    p_lb.add_argument("--regret", action="store_true",
                      help="also estimate the expected uniform regret on the "
                           "signed-scale game")
    p_lb.add_argument("--output", help="JSON output path")
    p_lb.set_defaults(func=_cmd_lowerbound)

    p_verify = sub.add_parser("verify", help="run the identity/invariant suite")
    p_verify.add_argument("--fast", action="store_true",
                          help="smaller sample counts for a quick smoke test")
    p_verify.set_defaults(func=_cmd_verify)

    p_bench = sub.add_parser("bench", help="compare kernel backends")
    p_bench.add_argument("--repeat", type=int, default=3)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
