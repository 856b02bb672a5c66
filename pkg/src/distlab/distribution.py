"""Exact distribution functions of sampled fields and their integral laws.

A sampled nonnegative field induces an atomic measure: each masked cell
carries mass h^dim.  Its two distribution functions

    mu_plus(t)  = measure of {value >= t}   (non-increasing, left-continuous)
    mu_minus(t) = measure of {value >  t}   (non-increasing, right-continuous)

are exact step functions of the sorted sample levels, so the layer-cake
identity, the level-set bounds and the power-integral orderings all hold at
machine precision on the grid.  All measures are computed as a single
product (integer cell count) * h^dim, which keeps the comparisons in the
level-set bounds monotone under floating-point rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fields import ScalarField, integrate

__all__ = [
    "StepDistribution",
    "upper_distribution",
    "lower_distribution",
    "cavalieri_residual",
    "verify_level_bounds",
    "LevelBoundReport",
    "neg_power_integral",
    "pos_power_integral",
    "PowerIntegralResult",
    "distribution_csv",
    "curves_csv",
]


@dataclass(frozen=True, eq=False)
class StepDistribution:
    """Levels with their masses; evaluates both distribution functions.

    ``levels`` are the strictly increasing distinct sample values,
    ``counts`` the number of cells at each level, ``cell_volume`` the atom
    mass h^dim.  ``kind`` selects which convention ``__call__`` uses.
    """

    levels: np.ndarray
    counts: np.ndarray
    cell_volume: float
    kind: str = "upper"

    def __post_init__(self):
        if self.kind not in ("upper", "lower"):
            raise ValueError("kind must be 'upper' or 'lower'")
        if len(self.levels) != len(self.counts) or len(self.levels) == 0:
            raise ValueError("levels/counts mismatch")
        if not np.all(np.diff(self.levels) > 0):
            raise ValueError("levels must be strictly increasing")
        if not np.all(self.counts > 0):
            raise ValueError("masses must be positive")

    @cached_property
    def _tail_counts(self) -> np.ndarray:
        # _tail_counts[k] = number of cells with level index >= k
        return np.concatenate([np.cumsum(self.counts[::-1])[::-1], [0]])

    @property
    def masses(self) -> np.ndarray:
        return self.counts * self.cell_volume

    @property
    def total_count(self) -> int:
        return int(self._tail_counts[0])

    @property
    def total(self) -> float:
        return self.total_count * self.cell_volume

    def mu_plus(self, t) -> np.ndarray | float:
        """Measure of the weak superlevel set {value >= t}."""
        idx = np.searchsorted(self.levels, t, side="left")
        out = self._tail_counts[idx] * self.cell_volume
        return float(out) if np.isscalar(t) else out

    def mu_minus(self, t) -> np.ndarray | float:
        """Measure of the strict superlevel set {value > t}."""
        idx = np.searchsorted(self.levels, t, side="right")
        out = self._tail_counts[idx] * self.cell_volume
        return float(out) if np.isscalar(t) else out

    def __call__(self, t):
        return self.mu_plus(t) if self.kind == "upper" else self.mu_minus(t)


def _distribution(field: ScalarField, kind: str) -> StepDistribution:
    vals = field.values
    if (vals < 0).any():
        raise ValueError("distribution functions require a nonnegative field")
    levels, counts = np.unique(vals, return_counts=True)
    return StepDistribution(levels, counts, field.grid.cell_volume, kind)


def upper_distribution(field: ScalarField) -> StepDistribution:
    """Step representation evaluating as mu_plus by default."""
    return _distribution(field, "upper")


def lower_distribution(field: ScalarField) -> StepDistribution:
    """Step representation evaluating as mu_minus by default."""
    return _distribution(field, "lower")


def cavalieri_residual(field: ScalarField) -> tuple[float, float, float]:
    """Layer-cake identity: the field integral against the areas under both
    distribution-function curves.  The three numbers agree to float
    round-off because the identity is exact for atomic measures."""
    dist = upper_distribution(field)
    total_int = integrate(field)
    # area under mu_plus via its step segments (Abel summation)
    lv = dist.levels
    tails = dist._tail_counts[: len(lv)] * dist.cell_volume
    prev = np.concatenate([[0.0], lv[:-1]])
    area_upper = float(((lv - prev) * tails).sum())
    # area under mu_minus via the per-level layer cake
    area_lower = float((dist.masses * lv).sum())
    return total_int, area_upper, area_lower


@dataclass(frozen=True)
class LevelBoundReport:
    a: float
    lower_set_measure: float
    lower_holds: bool  # measure{mu_minus o f <= a} >= a
    upper_set_measure: float
    upper_holds: bool  # measure{mu_plus o f < a} <= a

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds


def verify_level_bounds(field: ScalarField, a_values) -> list[LevelBoundReport]:
    """Check the two level-set bounds of the sampled measure for each a.

    Both inequalities are measure-theoretic facts, so they must hold for
    every field and every a in [0, total]; a violation indicates a bug.
    """
    dist = upper_distribution(field)
    vals = field.values
    hvol = dist.cell_volume
    mu_minus_of = dist.mu_minus(vals)
    mu_plus_of = dist.mu_plus(vals)
    reports = []
    for a in np.atleast_1d(np.asarray(a_values, dtype=float)):
        if a < 0 or a > dist.total:
            raise ValueError(f"a = {a} outside [0, {dist.total}]")
        lower_meas = int((mu_minus_of <= a).sum()) * hvol
        upper_meas = int((mu_plus_of < a).sum()) * hvol
        reports.append(
            LevelBoundReport(
                a=float(a),
                lower_set_measure=lower_meas,
                lower_holds=bool(lower_meas >= a),
                upper_set_measure=upper_meas,
                upper_holds=bool(upper_meas <= a),
            )
        )
    return reports


@dataclass(frozen=True)
class PowerIntegralResult:
    value: float
    bound: float
    relation: str  # "<=" means value <= bound is the claimed ordering
    holds: bool
    trimmed_value: float | None = None  # lower version with the top level removed

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "bound": self.bound,
            "relation": self.relation,
            "holds": self.holds,
            "trimmed_value": self.trimmed_value,
        }


_REL_SLACK = 1e-12  # float headroom on the exact sampled-measure orderings


def neg_power_integral(field: ScalarField, gamma: float, which: str) -> PowerIntegralResult:
    """Integral of (mu o f)^(-gamma) against the sampled measure.

    The upper version is bounded above by total^(1-gamma)/(1-gamma); the
    lower version is bounded below by it, and on a grid it is always +inf
    because the top level has empty strict superlevel set.  The trimmed
    diagnostic excludes the top level.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if which not in ("upper", "lower"):
        raise ValueError("which must be 'upper' or 'lower'")
    if which == "upper" and gamma >= 1:
        raise ValueError("upper version needs gamma < 1 for a finite bound")

    dist = upper_distribution(field)
    vals = field.values
    hvol = dist.cell_volume
    bound = dist.total ** (1.0 - gamma) / (1.0 - gamma) if gamma < 1 else math.inf

    if which == "upper":
        mu = dist.mu_plus(vals)
        value = float((mu**-gamma).sum() * hvol)
        holds = value <= bound * (1 + _REL_SLACK)
        return PowerIntegralResult(value, bound, "<=", bool(holds))

    mu = dist.mu_minus(vals)
    top = mu == 0.0
    value = math.inf if top.any() else float((mu**-gamma).sum() * hvol)
    trimmed = float((mu[~top] ** -gamma).sum() * hvol)
    holds = value >= bound * (1 - _REL_SLACK)
    return PowerIntegralResult(value, bound, ">=", bool(holds), trimmed_value=trimmed)


def pos_power_integral(field: ScalarField, r: float, which: str) -> PowerIntegralResult:
    """Integral of (mu o f)^r; the ordering of the bounds is reversed
    relative to the negative-power case."""
    if r <= 0:
        raise ValueError("r must be positive")
    if which not in ("upper", "lower"):
        raise ValueError("which must be 'upper' or 'lower'")

    dist = upper_distribution(field)
    vals = field.values
    hvol = dist.cell_volume
    bound = dist.total ** (1.0 + r) / (1.0 + r)
    if which == "upper":
        value = float((dist.mu_plus(vals) ** r).sum() * hvol)
        holds = value >= bound * (1 - _REL_SLACK)
        return PowerIntegralResult(value, bound, ">=", bool(holds))
    value = float((dist.mu_minus(vals) ** r).sum() * hvol)
    holds = value <= bound * (1 + _REL_SLACK)
    return PowerIntegralResult(value, bound, "<=", bool(holds))


def distribution_csv(dist: StepDistribution) -> str:
    """Two-column CSV of the step representation."""
    lines = ["level,mass"]
    for lv, ms in zip(dist.levels, dist.masses):
        lines.append(f"{float(lv)!r},{float(ms)!r}")
    return "\n".join(lines) + "\n"


def curves_csv(dist: StepDistribution, ts) -> str:
    """Evaluated curves (t, mu_plus, mu_minus) on a user-supplied t-grid."""
    ts = np.asarray(ts, dtype=float)
    up = dist.mu_plus(ts)
    lo = dist.mu_minus(ts)
    lines = ["t,mu_plus,mu_minus"]
    for t, u, l in zip(ts, up, lo):
        lines.append(f"{float(t)!r},{float(u)!r},{float(l)!r}")
    return "\n".join(lines) + "\n"
