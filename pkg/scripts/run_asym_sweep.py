#!/usr/bin/env python3
"""Sweep of the unequal-basin two-sink map: the limit weights should approach
the bisection-oracle basin lengths (about 0.597 / 0.403 at the defaults)."""

import argparse
import sys

from rdslab.cli import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/asym_two_sink")
    parser.add_argument("--seed", type=int, default=20250808)
    args = parser.parse_args()
    sys.exit(main([
        "sweep", "--model", "asym_two_sink", "--params", "a=0.03,b=0.05",
        "--eps", "0.04,0.02,0.01",
        "--n", "100000", "--samples", "20", "--x-samples", "200",
        "--seed", str(args.seed), "--out", args.out,
    ]))
