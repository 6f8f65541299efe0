#!/usr/bin/env python3
"""Full-budget sweep of the symmetric two-sink circle map.

Produces the report directory used by the weight/convergence figures: five
descending noise levels, 1d cells of width eps/8, Monte Carlo cross-check at
n=1e5 with 20 x 200 orbits.
"""

import argparse
import sys

from rdslab.cli import main


def run(out_dir: str, seed: int) -> int:
    return main([
        "sweep", "--model", "north_south", "--params", "a=0.05",
        "--eps", "0.08,0.04,0.02,0.01,0.005",
        "--n", "100000", "--samples", "20", "--x-samples", "200",
        "--seed", str(seed), "--out", out_dir,
    ])


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/north_south")
    parser.add_argument("--seed", type=int, default=20250808)
    args = parser.parse_args()
    sys.exit(run(args.out, args.seed))
