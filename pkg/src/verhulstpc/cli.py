"""Command line: ``verhulstpc run|fixtures|complexity``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .scenario import ScenarioError, load_scenario


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _strs(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _scenario(ref: str):
    if ref in harness.FIXTURES and not Path(ref).exists():
        return harness.load_fixture(ref)
    return load_scenario(ref)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="verhulstpc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment and write CSV outputs")
    r.add_argument("experiment", choices=harness.KINDS)
    r.add_argument("--scenario", default="table1_defaults",
                   help="scenario file or bundled fixture name")
    r.add_argument("--out", required=True, type=Path)
    r.add_argument("--seed", type=int)
    r.add_argument("--trials", type=int, default=100)
    r.add_argument("--iterations", type=int)
    r.add_argument("--k", type=_ints, help="comma-separated K values")
    r.add_argument("--deltas", type=_floats, help="comma-separated error half-widths")
    r.add_argument("--alphas", type=_floats, help="comma-separated fixed alphas")
    r.add_argument("--modes", type=_strs, help="comma-separated alpha modes")
    r.add_argument("--outage-policy", choices=harness.OUTAGE_POLICIES, default="redraw")
    r.add_argument("--static-error", action="store_true",
                   help="draw the gain-estimate error once per trial instead of every iteration")

    f = sub.add_parser("fixtures", help="list bundled scenarios")
    f.add_argument("--show", metavar="NAME", help="print one fixture")

    c = sub.add_parser("complexity", help="per-iteration operation counts")
    c.add_argument("--k", type=_ints, default=(5, 10, 20, 30))
    c.add_argument("--iterations", type=int, default=10)
    c.add_argument("--out", type=Path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "fixtures":
            if args.show:
                sys.stdout.write(harness.fixture_text(args.show))
            else:
                print("\n".join(harness.list_fixtures()))
            return 0
        if args.command == "complexity":
            rows = harness.complexity_report(args.k, iterations=args.iterations)
            if args.out:
                args.out.mkdir(parents=True, exist_ok=True)
                harness.write_complexity(args.out / "complexity.csv", rows)
            print(",".join(harness.COMPLEXITY_COLUMNS))
            for row in harness.complexity_table(rows):
                print(",".join(harness.fmt(v) for v in row))
            return 0

        scenario = _scenario(args.scenario)
        if args.static_error:
            scenario = replace(scenario, channel=replace(scenario.channel, error_per_iteration=False))
        exp = harness.Experiment(
            args.experiment, scenario, trials=args.trials, seed=args.seed,
            iterations=args.iterations, k_values=args.k, deltas=args.deltas, alphas=args.alphas,
            modes=args.modes, outage_policy=args.outage_policy,
        )
        for path in harness.run_experiment(exp, args.out):
            print(path)
        return 0
    except (ScenarioError, harness.HarnessError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
