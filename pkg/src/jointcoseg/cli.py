"""Command line entry point.

Exit codes: 0 success, 1 usage or input error, 2 infeasible problem.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .baselines import BaselineMode, run
from .instance import Hyperparams, InstanceError, load_instance, save_instance, validate
from .labelfile import load_labeling, save_labeling
from .metrics import evaluate
from .oracle import InstanceTooLarge, brute_force
from .qp import assemble, build_matrices, dump_constraints
from .solver import InfeasibleError, SolverConfig
from .synth import SynthConfig, generate

log = logging.getLogger("jointcoseg")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bounds(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'lo,hi'")
    return lo, hi


def _hyperparams(args) -> Hyperparams:
    hp = Hyperparams()
    updates = {}
    for flag, field in [("alpha", "alpha"), ("nu", "nu"), ("mu", "mu"), ("gamma", "gamma"),
                        ("beta_s", "beta_s"), ("beta_b", "beta_b"), ("fraction", "baseline_fraction"),
                        ("fg_bounds", "fg_bounds")]:
        value = getattr(args, flag, None)
        if value is not None:
            updates[field] = value
    return replace(hp, **updates)


def _print_report(report) -> None:
    for key, value in report.as_dict().items():
        shown = "n/a" if value is None else f"{value:.6g}"
        print(f"{key:18s} {shown}")


def cmd_solve(args) -> int:
    instances = load_instance(args.instance)
    hp = _hyperparams(args)
    report = validate(instances, hp)
    if not report.ok:
        raise InstanceError("; ".join(report.violations))
    cfg = SolverConfig(tol_primal=args.tol, tol_dual=args.tol, seed=args.seed)
    mode = BaselineMode.parse(args.mode)
    mats = build_matrices(instances, hp)
    if args.dump_constraints:
        if mode is not BaselineMode.JOINT:
            raise InstanceError("--dump-constraints applies to the joint mode only")
        with open(args.dump_constraints, "w", encoding="utf-8") as fh:
            fh.write(dump_constraints(assemble(instances, mats, hp)))
    labeling, metrics = run(mode, instances, hp, cfg, mats)
    save_labeling(labeling, args.out, mode=mode.value, metrics=metrics.as_dict())
    _print_report(metrics)
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = SynthConfig.load(args.config)
    save_instance(generate(cfg), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    instances = load_instance(args.instance)
    labeling = load_labeling(args.pred)
    if len(labeling.chosen_box) != len(instances.images):
        raise InstanceError("labeling and instance disagree on the number of images")
    _print_report(evaluate(labeling, instances))
    return EXIT_OK


def cmd_oracle(args) -> int:
    instances = load_instance(args.instance)
    hp = _hyperparams(args)
    labeling, value = brute_force(instances, build_matrices(instances, hp), hp)
    report = evaluate(labeling, instances)
    report.objective = value
    save_labeling(labeling, args.out, mode="oracle", metrics=report.as_dict())
    _print_report(report)
    return EXIT_OK


def _hp_flags(p):
    p.add_argument("--alpha", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta-s", dest="beta_s", type=float)
    p.add_argument("--beta-b", dest="beta_b", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jointcoseg", description="Joint colocalization and cosegmentation QP")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run the joint model or a baseline")
    p.add_argument("--mode", required=True, choices=["joint", "b1", "b2", "b3", "sal", "sal-disc", "sal_disc"])
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True)
    _hp_flags(p)
    p.add_argument("--fraction", type=float)
    p.add_argument("--fg-bounds", dest="fg_bounds", type=_bounds)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-constraints", dest="dump_constraints")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="write a planted synthetic instance")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="score a labeling file")
    p.add_argument("--pred", required=True)
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="exhaustive integer optimum (small instances)")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True)
    _hp_flags(p)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InstanceError, InstanceTooLarge, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
