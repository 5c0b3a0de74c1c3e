#!/usr/bin/env python3
"""Share of random draws with rho(B) >= 1, and the rho distribution, per K."""
import argparse

import numpy as np

from verhulstpc import analytic, harness, linkmath
from verhulstpc.channel import build_gain_matrix
from verhulstpc.scenario import redraw, streams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=500)
    ap.add_argument("--k", type=int, nargs="+", default=[5, 7, 10, 20, 30])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    base = harness.load_fixture("table1_defaults")
    print("K,draws,infeasible_share,outage_share,rho_median,rho_p90")
    for k in args.k:
        s0 = harness._with_users(base, k)
        rho, outage = [], 0
        for t in range(args.draws):
            rngs = streams(args.seed, "feasibility", k, t)
            s = redraw(s0, rngs)
            g = build_gain_matrix(s.geometry, rngs["channel"], s.channel)
            targets = linkmath.cir_targets(s.classes, s.class_of_user, s.radio)
            system = analytic.build_system(g, targets, s.radio.noise_power)
            rho.append(system.spectral_radius)
            if system.feasible and system.spectral_radius < 1 - analytic.SINGULAR_MARGIN:
                outage += analytic.solve_optimal(system, s.radio).outage_count > 0
        rho = np.array(rho)
        print(f"{k},{args.draws},{np.mean(rho >= 1):.3f},{outage / args.draws:.3f},"
              f"{np.median(rho):.3f},{np.quantile(rho, 0.9):.3f}")


if __name__ == "__main__":
    main()
