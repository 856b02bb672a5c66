#!/usr/bin/env python3
"""Refinement sweep on the cone, the equality case of the superlevel
inequality and of the inverse-distribution integral bound.

Prints one row per resolution: both sides of the superlevel check, their
ratio, and the inverse-distribution integral against its limit 2 sqrt(pi).
"""

import argparse
import math
import time

import numpy as np

from distlab.distribution import neg_power_integral
from distlab.fields import Ball, build_grid, sample
from distlab.sobolev import superlevel_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[64, 128, 256, 512])
    args = ap.parse_args()

    target = 2 * math.sqrt(math.pi)
    print(f"{'res':>5} {'lhs':>10} {'rhs':>10} {'rhs/lhs':>9} {'inv-int':>10} {'limit':>8} {'sec':>6}")
    for res in args.resolutions:
        t0 = time.time()
        grid = build_grid(Ball((0.0, 0.0), 1.0), res)
        f = sample(grid, lambda p: 1.0 - np.sqrt((p**2).sum(axis=-1)))
        rep = superlevel_check(f)
        inv = neg_power_integral(f, 0.5, "upper")
        dt = time.time() - t0
        print(
            f"{res:>5} {rep.lhs:>10.6f} {rep.rhs:>10.6f} {rep.rhs / rep.lhs:>9.5f} "
            f"{inv.value:>10.6f} {target:>8.5f} {dt:>6.2f}"
        )


if __name__ == "__main__":
    main()
