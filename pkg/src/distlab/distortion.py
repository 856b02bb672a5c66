"""Pointwise verification of the distortion inequality with defect.

A sampled map f satisfies the inequality with data (K, Sigma) when

    |Df|^n <= K * J_f + Sigma          cellwise,

with |Df| the operator norm of the difference derivative and J_f its
determinant.  With a target point y0 the defect term becomes
|f - y0|^n * Sigma, localizing the inequality at one value.  This module
decomposes Jacobians into sign parts, extracts the pointwise distortion
quotient where the Jacobian is positive, computes the minimal defect that
makes the inequality hold, and evaluates the zero-integral laws for
Jacobians whose distinguished coordinate has (approximately) compact
support.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fields import (
    ScalarField,
    VectorMap,
    boundary_support_ok,
    differential,
    integrate,
    jacobian,
    op_norm,
)
from .staircase import MonotoneFn

__all__ = [
    "DistortionData",
    "DistortionReport",
    "jacobian_parts",
    "pointwise_distortion",
    "residual_defect",
    "verify_distortion",
    "zero_integral_check",
    "weighted_zero_integral_check",
    "normalize_low_distortion",
    "lebesgue_norm",
    "violations_csv",
]

_J_GATE = 1e-12  # J > gate * |Df|^n defines the pointwise quotient
_PT_TOL = 1e-9  # relative float tolerance of the cellwise inequality


def _as_field(grid, arr, **kw) -> ScalarField:
    return ScalarField(grid, np.where(grid.mask, arr, np.nan), **kw)


@dataclass(frozen=True, eq=False)
class DistortionData:
    """Distortion data (K, Sigma) with integrability exponents (p, q).

    K >= 0 cellwise (>= 1 after :func:`normalize_low_distortion`); Sigma >= 0
    and may carry +inf sentinels.  Exponents live in [1, inf].
    """

    K: ScalarField
    Sigma: ScalarField
    p: float = math.inf
    q: float = math.inf

    def __post_init__(self):
        if self.K.grid is not self.Sigma.grid and self.K.grid.shape != self.Sigma.grid.shape:
            raise ValueError("K and Sigma must live on the same grid")
        if (self.K.values < 0).any():
            raise ValueError("K must be nonnegative")
        if (self.Sigma.values < 0).any():
            raise ValueError("Sigma must be nonnegative")
        if self.p < 1 or self.q < 1:
            raise ValueError("exponents must lie in [1, inf]")

    @property
    def admissible(self) -> bool:
        return _inv(self.p) + _inv(self.q) < 1.0

    @property
    def k_at_least_one(self) -> bool:
        return bool((self.K.values >= 1.0).all())


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def lebesgue_norm(field: ScalarField, p: float) -> float:
    """L^p norm on the sampled measure; the essential sup is the max."""
    vals = field.values
    if math.isinf(p):
        return float(np.abs(vals).max())
    return float((np.abs(vals) ** p).sum() * field.grid.cell_volume) ** (1.0 / p)


def jacobian_parts(vm: VectorMap) -> tuple[ScalarField, ScalarField]:
    """Positive and negative parts of the Jacobian: J = Jplus - Jminus."""
    J = jacobian(differential(vm))
    grid = vm.grid
    jplus = _as_field(grid, np.maximum(J.data, 0.0), nonnegative=True)
    jminus = _as_field(grid, np.maximum(-J.data, 0.0), nonnegative=True)
    return jplus, jminus


def pointwise_distortion(vm: VectorMap) -> ScalarField:
    """|Df|^n / J_f on the cells where the Jacobian is genuinely positive.

    Returns a field on the sub-masked grid {J > 1e-12 |Df|^n}; everywhere
    else the quotient is undefined.
    """
    grid = vm.grid
    n = grid.dim
    D = differential(vm)
    dn = op_norm(D).data**n
    J = jacobian(D).data
    defined = grid.mask & (J > _J_GATE * dn) & (dn > 0)
    if not defined.any():
        raise ValueError("Jacobian is nowhere positive; pointwise distortion undefined")
    sub = grid.with_mask(defined)
    with np.errstate(invalid="ignore", divide="ignore"):
        quot = np.where(defined, dn / J, np.nan)
    return ScalarField(sub, quot, nonnegative=True)


def residual_defect(vm: VectorMap, K: ScalarField) -> ScalarField:
    """Minimal cellwise defect making the distortion inequality hold:
    Sigma_min = max(0, |Df|^n - K * J_f)."""
    if (K.values < 1.0).any():
        raise ValueError("residual defect expects K >= 1 cellwise")
    grid = vm.grid
    n = grid.dim
    D = differential(vm)
    dn = op_norm(D).data**n
    J = jacobian(D).data
    return _as_field(grid, np.maximum(dn - K.data * J, 0.0), nonnegative=True)


@dataclass(frozen=True, eq=False)
class DistortionReport:
    """Outcome of a cellwise distortion verification."""

    violation_count: int
    max_violation: float  # max of |Df|^n - K J - defect (signed)
    max_excess: float  # max of the same minus the cell tolerance
    K_norm_p: float
    Sigma_over_K_norm_q: float
    pointwise_K: ScalarField | None
    residual_Sigma: ScalarField
    p: float
    q: float
    infinite_sigma_cells: int
    checked_cells: int
    critical_holder_exponent: float | None
    violation_indices: np.ndarray  # flat indices into the masked cell order
    violation_lhs: np.ndarray
    violation_rhs: np.ndarray
    resolution: tuple[int, ...]
    spacing: float
    tol_rel: float

    @property
    def zero_violations(self) -> bool:
        return self.violation_count == 0

    def as_dict(self) -> dict:
        return {
            "violation_count": self.violation_count,
            "max_violation": self.max_violation,
            "max_excess": self.max_excess,
            "K_norm_p": self.K_norm_p,
            "Sigma_over_K_norm_q": self.Sigma_over_K_norm_q,
            "p": self.p,
            "q": self.q,
            "infinite_sigma_cells": self.infinite_sigma_cells,
            "checked_cells": self.checked_cells,
            "critical_holder_exponent": self.critical_holder_exponent,
            "resolution": list(self.resolution),
            "spacing": self.spacing,
            "tol_rel": self.tol_rel,
        }


def verify_distortion(
    vm: VectorMap,
    data: DistortionData,
    y0=None,
    rel_tol: float | None = None,
) -> DistortionReport:
    """Check |Df|^n <= K J_f + defect cellwise and collect norms.

    With ``y0`` the defect is |f - y0|^n * Sigma (a quasiregular-value /
    value-of-finite-distortion check); without it the defect is Sigma.
    The default cell tolerance 1e-9 * (1 + |Df|^n) only absorbs float
    noise; exact-equality analytic data needs ``rel_tol`` at the level of
    the finite-difference error (the gallery agreement suite uses 3e-2).
    Cells with Sigma = +inf never violate and are excluded from the L^q
    norm, with their count reported.
    """
    grid = vm.grid
    n = grid.dim
    D = differential(vm)
    dn = op_norm(D).values ** n
    J = jacobian(D).values
    K = data.K.values
    Sigma = data.Sigma.values

    if y0 is not None:
        y0 = np.asarray(y0, dtype=float)
        if y0.shape != (n,):
            raise ValueError("y0 must be a point of the target space")
        dist_n = ((vm.data[grid.mask] - y0) ** 2).sum(axis=1) ** (n / 2.0)
        defect = dist_n * Sigma
    else:
        defect = Sigma

    with np.errstate(invalid="ignore"):
        rhs = K * J + defect
        rhs = np.where(np.isposinf(defect), np.inf, rhs)
        resid = dn - rhs
    if rel_tol is None:
        tol = _PT_TOL * (1.0 + dn)
        used_tol = _PT_TOL
    else:
        tol = rel_tol * (1.0 + dn + np.abs(K * J))
        used_tol = rel_tol
    excess = resid - tol
    violated = excess > 0

    finite_sigma = np.isfinite(Sigma)
    usable = finite_sigma & (K > 0)
    ratio = Sigma[usable] / K[usable]
    hvol = grid.cell_volume
    if not usable.any():
        sk_norm = 0.0
    elif math.isinf(data.q):
        sk_norm = float(ratio.max())
    else:
        sk_norm = float((ratio**data.q).sum() * hvol) ** (1.0 / data.q)
    k_norm = lebesgue_norm(data.K, data.p)
    crit = None
    if math.isinf(data.p):
        kinf = lebesgue_norm(data.K, math.inf)
        crit = min(1.0 / kinf if kinf > 0 else math.inf, 1.0 - _inv(data.q))

    try:
        pk = pointwise_distortion(vm)
    except ValueError:
        pk = None
    residual = _as_field(grid, np.maximum(op_norm(D).data ** n - data.K.data * jacobian(D).data, 0.0), nonnegative=True)

    idx = np.nonzero(violated)[0]
    finite_resid = np.where(np.isneginf(resid), -np.inf, resid)
    return DistortionReport(
        violation_count=int(violated.sum()),
        max_violation=float(finite_resid.max()),
        max_excess=float(excess.max()),
        K_norm_p=k_norm,
        Sigma_over_K_norm_q=sk_norm,
        pointwise_K=pk,
        residual_Sigma=residual,
        p=data.p,
        q=data.q,
        infinite_sigma_cells=int((~finite_sigma).sum()),
        checked_cells=int(grid.cell_count),
        critical_holder_exponent=crit,
        violation_indices=idx,
        violation_lhs=dn[idx],
        violation_rhs=rhs[idx],
        resolution=grid.shape,
        spacing=grid.spacing,
        tol_rel=used_tol,
    )


def zero_integral_check(vm: VectorMap, i: int) -> float:
    """Integral of the Jacobian when coordinate i has compact support.

    The continuum value is exactly zero; the grid value is discretization
    noise.  Emits a warning when coordinate i is visibly nonzero at the
    mask boundary, in which case the law does not apply.
    """
    comp = vm.component(i)
    if not boundary_support_ok(comp):
        warnings.warn(
            f"component {i} is not approximately compactly supported; "
            "the zero-integral law does not apply",
            stacklevel=2,
        )
    return integrate(jacobian(differential(vm)))


def weighted_zero_integral_check(
    vm: VectorMap, i: int, F: MonotoneFn
) -> tuple[float, float, float]:
    """Integrals of F(|f_i|) J, F(|f_i|) J^+ and F(|f_i|) J^-.

    In the continuum the signed integral vanishes and the sign parts agree,
    provided one of them is finite; on the grid the difference is
    discretization noise scaled by F.
    """
    comp = vm.component(i)
    if not boundary_support_ok(comp):
        warnings.warn(
            f"component {i} is not approximately compactly supported; "
            "the weighted zero-integral law does not apply",
            stacklevel=2,
        )
    weights = F(np.abs(comp.values))
    if not np.isfinite(weights).all():
        raise ValueError("F takes the value +inf on attained values of |f_i|")
    J = jacobian(differential(vm)).values
    hvol = vm.grid.cell_volume
    pos = float((weights * np.maximum(J, 0.0)).sum() * hvol)
    neg = float((weights * np.maximum(-J, 0.0)).sum() * hvol)
    value = float((weights * J).sum() * hvol)
    return value, pos, neg


def normalize_low_distortion(data: DistortionData) -> DistortionData:
    """Trade K >= 0 for K >= 1: (K, Sigma) -> (max(1, 2K), 4 Sigma).

    Any map satisfying the inequality with the original data also satisfies
    it with the normalized data.
    """
    grid = data.K.grid
    K2 = _as_field(grid, np.maximum(1.0, 2.0 * data.K.data), nonnegative=True)
    S4 = ScalarField(
        grid,
        np.where(grid.mask, 4.0 * data.Sigma.data, np.nan),
        nonnegative=True,
        allow_infinite=data.Sigma.allow_infinite,
    )
    return DistortionData(K2, S4, data.p, data.q)


def violations_csv(report: DistortionReport) -> str:
    """Per-cell violation rows (masked-cell index, lhs, rhs)."""
    lines = ["cell_index,lhs,rhs"]
    for i, l, r in zip(report.violation_indices, report.violation_lhs, report.violation_rhs):
        lines.append(f"{int(i)},{float(l)!r},{float(r)!r}")
    return "\n".join(lines) + "\n"
