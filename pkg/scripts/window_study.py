#!/usr/bin/env python3
"""Training-window study for the daily mileage forecaster.

Builds a cohort of synthetic drivers with noisy weekly patterns and reports
the sliding-window cross-validation errors for several training window
sizes. Longer windows should help on periodic-with-noise behavior.
"""

import argparse
import random
import statistics
import sys
from datetime import date, timedelta

from refuelopt.mileage import build_features, sliding_cv

MONDAY = date(2025, 1, 6)


def driver_series(cohort_seed: int, driver: int, weeks: int) -> dict:
    rng = random.Random(f"trend:{cohort_seed}:{driver}")
    pattern = [rng.uniform(5.0, 40.0) for _ in range(7)]
    return {MONDAY + timedelta(days=i): max(0.0, pattern[i % 7] + rng.gauss(0.0, 4.0))
            for i in range(weeks * 7)}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--drivers", type=int, default=12)
    parser.add_argument("--weeks", type=int, default=13)
    parser.add_argument("--windows", type=int, nargs="+", default=[4, 6, 8])
    parser.add_argument("--trees", type=int, default=50)
    args = parser.parse_args()

    print(f"{'window':>6} {'MAE [km/day]':>14} {'E_week [km]':>13} {'E_week%':>9}")
    for window in args.windows:
        maes, eweeks, pcts = [], [], []
        for driver in range(args.drivers):
            rows = build_features(driver_series(args.seed, driver, args.weeks))
            report = sliding_cv(rows, window_weeks=window,
                                n_trees=args.trees, seed=0)
            maes.append(report.mean.mae)
            eweeks.append(report.mean.e_week)
            pcts.append(report.mean.e_week_pct)
        print(f"{window:>5}w {statistics.mean(maes):14.3f} "
              f"{statistics.mean(eweeks):13.3f} {statistics.mean(pcts):9.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
