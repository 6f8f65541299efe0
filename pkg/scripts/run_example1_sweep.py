#!/usr/bin/env python3
"""Sweep of the infinitely-many-sinks circle map.

As the noise level drops, more of the accumulating sinks get their own
stationary class; near the degenerate point the unresolved cascade stays one
almost-invariant blob.  The Monte Carlo leg is skipped: the per-level chain
analysis is the object of interest here.
"""

import argparse
import sys

from rdslab.cli import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/example1")
    parser.add_argument("--seed", type=int, default=20250808)
    args = parser.parse_args()
    sys.exit(main([
        "sweep", "--model", "example1",
        "--eps", "0.08,0.04,0.02,0.01,0.005",
        "--no-mc",
        "--seed", str(args.seed), "--out", args.out,
    ]))
