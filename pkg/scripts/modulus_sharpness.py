#!/usr/bin/env python3
"""Local modulus of continuity of the radial-log map at the origin.

Samples the map on concentric spheres at logarithmically spaced radii and
fits omega(r) ~ C log(1/r)^(-beta); the sharp exponent is beta = 1/n.
"""

import argparse

import numpy as np

from distlab.gallery import make_example
from distlab.monotonicity import log_power_fit, modulus_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=2, choices=(2, 3))
    ap.add_argument("--rmin-exp", type=float, default=-6, help="log10 of the smallest radius")
    ap.add_argument("--rmax-exp", type=float, default=-2, help="log10 of the largest radius")
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--samples", type=int, default=64)
    args = ap.parse_args()

    ex = make_example("radial_log", dim=args.dim)
    radii = np.logspace(args.rmin_exp, args.rmax_exp, args.points)
    curve = modulus_curve(ex.evaluator, (0.0,) * args.dim, radii, samples=args.samples)

    print(f"{'r':>12} {'omega':>12} {'log(1/r)^(-1/n)':>16}")
    for r, w in curve:
        print(f"{r:>12.3e} {w:>12.6f} {np.log(1 / r) ** (-1 / args.dim):>16.6f}")

    fit = log_power_fit(curve)
    print(
        f"\nfit: omega ~ {fit.C:.4f} * log(1/r)^(-{fit.beta:.4f})   "
        f"(sharp exponent 1/n = {1 / args.dim:.4f}, residual {fit.residual:.2e})"
    )


if __name__ == "__main__":
    main()
