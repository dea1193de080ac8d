"""Command line entry point: ``run-csl``, ``run-sine`` and ``selftest``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import selftest
from .harness import ExperimentConfig, emit_report, load_config, run_experiment


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--readout", choices=["svm", "pi", "pseudoinverse"])
    p.add_argument("--runs", dest="n_runs", type=int)
    p.add_argument("--seed", dest="base_seed", type=int)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--generations", dest="max_generations", type=int)
    p.add_argument("--cells", dest="n_cells", type=int)
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evoke", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    csl = sub.add_parser("run-csl", help="a^n b^n c^n generalization experiment")
    csl.add_argument("--n", dest="csl_n", type=int)
    _add_common(csl)
    sine = sub.add_parser("run-sine", help="superimposed sine generation experiment")
    _add_common(sine)
    sub.add_parser("selftest", help="run the oracle suite")
    return parser


def config_from_args(task: str, args) -> ExperimentConfig:
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = value.strip()
    values["task"] = task
    if args.config:
        return load_config(args.config, **values)
    return ExperimentConfig.from_mapping(values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "selftest":
        return 0 if selftest.run() else 1

    task = "csl" if args.command == "run-csl" else "sine"
    try:
        config = config_from_args(task, args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_experiment(config)
    emit_report(report, config.out_dir)
    agg = report.aggregate()
    print(f"{report.metric_name}: mean {agg['mean']:.6g} median {agg['median']:.6g} "
          f"min {agg['min']:.6g} max {agg['max']:.6g} over {agg['n']} runs")
    return 0 if agg["n"] == len(report.runs) else 1


if __name__ == "__main__":
    sys.exit(main())
