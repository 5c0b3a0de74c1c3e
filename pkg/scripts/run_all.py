#!/usr/bin/env python3
"""Run every experiment at full size and write CSVs under one directory."""
import argparse
import logging
import time
from pathlib import Path

from verhulstpc import harness

PLAN = {
    "convergence": ("fig2_k7", {"alphas": (0.1, 0.9), "iterations": 1000}),
    "nser_vs_error": ("fig2_k7", {}),
    "nse_vs_loading": ("table1_defaults", {"k_values": (10, 20, 30), "alphas": (0.2,)}),
    "adaptive_compare": ("table1_defaults", {"k_values": (30,)}),
    "complexity": ("table1_defaults", {"k_values": (1, 5, 10, 20, 30)}),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--only", choices=harness.KINDS, action="append")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    for kind in args.only or harness.KINDS:
        fixture, kw = PLAN[kind]
        scenario = harness.load_fixture(fixture)
        exp = harness.Experiment(kind, scenario, trials=args.trials, seed=args.seed, **kw)
        t0 = time.perf_counter()
        paths = harness.run_experiment(exp, args.out / kind)
        print(f"{kind}: {len(paths)} files in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
