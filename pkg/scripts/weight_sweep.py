#!/usr/bin/env python3
"""Sweep the cost/time weights over a synthetic cohort.

Replays the route-aware strategy under each (K1, K2) pair and prints the
mean chosen cost and detour time, showing the cost/time trade-off as the
weighting shifts from fuel-only to time-only.
"""

import argparse
import sys
import tempfile

from refuelopt.harness import run_cohort
from refuelopt.optimizer import Mode
from refuelopt.scenario import generate_scenario_dir, load_scenarios

WEIGHT_GRID = ((1.0, 0.0), (10.0, 1.0), (1.0, 1.0), (1.0, 10.0), (0.0, 1.0))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--seeds-per-profile", type=int, default=5)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    modes = tuple(Mode(f"k{k1:g}_{k2:g}", k1, k2) for k1, k2 in WEIGHT_GRID)
    with tempfile.TemporaryDirectory() as tmp:
        config = generate_scenario_dir(tmp, seed=args.seed,
                                       n_seeds_per_profile=args.seeds_per_profile)
        scenarios = load_scenarios(config)
        report = run_cohort(scenarios, strategies=("route_aware",), modes=modes,
                            jobs=args.jobs)

    print(f"{'K1':>5} {'K2':>5} {'cost [EUR]':>14} {'time [min]':>14} runs failed")
    for row in report.rows:
        print(f"{row.k_cost:5g} {row.k_time:5g} "
              f"{row.cost_mean:8.2f} ± {row.cost_std:4.2f} "
              f"{row.time_mean:8.2f} ± {row.time_std:4.2f} "
              f"{row.n_runs:4d} {row.n_failed:6d}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
