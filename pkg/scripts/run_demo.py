#!/usr/bin/env python3
"""End-to-end demo: generate a synthetic city cohort and compare strategies.

Writes the scenario directory and the simulation reports under --out-dir and
prints the strategy comparison table.
"""

import argparse
import sys
from pathlib import Path

from refuelopt.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="demo_out")
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--seeds-per-profile", type=int, default=5)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    scn_dir = Path(args.out_dir) / "scenario"
    rc = cli_main(["gen", "--out-dir", str(scn_dir), "--seed", str(args.seed),
                   "--seeds-per-profile", str(args.seeds_per_profile)])
    if rc != 0:
        return rc
    return cli_main(["simulate", "--config", str(scn_dir / "scenario.yaml"),
                     "--out-dir", str(Path(args.out_dir) / "reports"),
                     "--seed", str(args.seed), "--jobs", str(args.jobs)])


if __name__ == "__main__":
    sys.exit(main())
