"""Command-line entry point: ``cole {run,analyze,solve,resume}``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cole", description="Population training on common-payoff matrix games.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("--config", required=True, metavar="PATH")
    run.add_argument("--out", metavar="DIR")
    run.add_argument("--seed", type=int)
    run.add_argument("--generations", type=int)
    run.add_argument("--ties", choices=["lowest", "highest"])

    analyze = sub.add_parser("analyze", help="preference-graph analysis of a payoff CSV")
    analyze.add_argument("payoff_csv")
    analyze.add_argument("--ties", choices=["lowest", "highest"], default="lowest")
    analyze.add_argument("--out", metavar="DIR", default=".")

    solve = sub.add_parser("solve", help="graphic Shapley values and incompatibility distribution")
    solve.add_argument("payoff_csv")
    solve.add_argument("--mc-samples", type=int, default=10_000)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--ties", choices=["lowest", "highest"], default="lowest")
    solve.add_argument("--out", metavar="DIR", default=".")

    resume = sub.add_parser("resume", help="continue a run from its checkpoint")
    resume.add_argument("checkpoint")
    resume.add_argument("--generations", type=int, required=True, help="extra generations to run")
    resume.add_argument("--out", metavar="DIR")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return experiment.cmd_run(args.config, args.out, args.seed, args.generations, args.ties)
    if args.command == "analyze":
        return experiment.cmd_analyze(args.payoff_csv, args.ties, args.out)
    if args.command == "solve":
        return experiment.cmd_solve(args.payoff_csv, args.mc_samples, args.seed, args.out, args.ties)
    return experiment.cmd_resume(args.checkpoint, args.generations, args.out)


if __name__ == "__main__":
    sys.exit(main())
