#!/usr/bin/env python3
"""Sweep of the planar heteroclinic-loop model on the cylinder.

The global measure should concentrate on the loop set with its test-function
integrals approaching the segment spanned by the two saddle Diracs; expect
roughly ten minutes of wall time at these settings.
"""

import argparse
import sys

from rdslab.cli import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/bowen")
    parser.add_argument("--seed", type=int, default=20250808)
    parser.add_argument("--samples-per-cell", type=int, default=144)
    args = parser.parse_args()
    sys.exit(main([
        "sweep", "--model", "bowen", "--params", "c=4",
        "--eps", "0.04,0.02,0.01",
        "--n", "2500", "--samples", "5", "--x-samples", "100",
        "--samples-per-cell", str(args.samples_per_cell),
        "--seed", str(args.seed), "--out", args.out,
    ]))
