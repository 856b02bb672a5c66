#!/usr/bin/env python3
"""Replay the sup-norm estimate chain on two configurations.

The radial-log map has weakly monotone coordinates, so truncating at the
sphere-trace boundary maximum leaves nothing and the ledger is trivially
zero.  A bump-perturbed identity map carries a genuine interior excess:
its ledger exercises every inequality with real numbers.
"""

import argparse

import numpy as np

from distlab.distortion import DistortionData, residual_defect
from distlab.fields import Ball, Box, ScalarField, build_grid, sample
from distlab.gallery import make_example, sample_analytic_k, sample_map
from distlab.monotonicity import ball_extrema, sup_bound_chain


def bump_perturbed_identity(p):
    r2 = (p**2).sum(axis=-1) / 0.25
    b = np.zeros(len(p))
    inside = r2 < 1.0
    b[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return np.stack([p[..., 0] + b, p[..., 1]], axis=-1)


def print_ledger(title, ledger):
    print(f"\n== {title} ==")
    e = ledger.entries
    print(f"trivial: {ledger.trivial}   holds_all: {ledger.holds_all}")
    if not ledger.trivial:
        print(
            f"sup^n = {e['sup_phi_n']:.6g}   energy = {e['energy']:.6g}   "
            f"residual = {e['jacobian_residual']:.3g}   final bound = {e['final_bound']:.6g}"
        )
    for c in ledger.checks:
        mark = "ok " if c.holds else "FAIL"
        print(f"  [{mark}] {c.name:<16} lhs = {c.lhs:<12.6g} rhs = {c.rhs:.6g}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolution", type=int, default=256)
    args = ap.parse_args()

    ex = make_example("radial_log")
    g = build_grid(ex.default_domain, args.resolution)
    vm = sample_map(ex, g)
    ball = Ball((0.0, 0.0), ex.default_domain.radius / 2)
    ext = ball_extrema(vm.component(0), ball, samples=720)
    sub = vm.restrict(g.ball_mask(ball))
    K = sample_analytic_k(ex, sub.grid, clamped=True)
    data = DistortionData(K, residual_defect(sub, K), 4.0, 4.0)
    led = sup_bound_chain(sub, data, 0, ext.boundary_max, "above")
    print_ledger("radial-log map, level = boundary max (degenerate)", led)

    g2 = build_grid(Box((-1.0, -1.0), (1.0, 1.0)), args.resolution)
    vm2 = sample(g2, bump_perturbed_identity)
    ball2 = Ball((0.0, 0.0), 0.75)
    ext2 = ball_extrema(vm2.component(0), ball2, samples=720)
    sub2 = vm2.restrict(g2.ball_mask(ball2))
    K2 = ScalarField.from_values(sub2.grid, np.full(sub2.grid.cell_count, 2.0), nonnegative=True)
    data2 = DistortionData(K2, residual_defect(sub2, K2), 3.0, 4.0)
    led2 = sup_bound_chain(sub2, data2, 0, ext2.boundary_max, "above")
    print_ledger("bump-perturbed identity, K = 2, minimal defect", led2)


if __name__ == "__main__":
    main()
