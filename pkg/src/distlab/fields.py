"""Discretization substrate: grids, sampled fields, derivative surrogates.

Everything downstream works on cell-centered uniform lattices in dimension
2 or 3 with a boolean domain mask (box or ball domains).  Sampled scalar
fields and vector maps stand in for Sobolev functions and mappings; weak
derivatives are replaced by central differences (one-sided at the mask
boundary), integrals by the midpoint rule, and restrictions to spheres by
multilinear interpolation at fixed quadrature points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Box",
    "Ball",
    "Grid",
    "ScalarField",
    "VectorMap",
    "MatrixField",
    "build_grid",
    "sample",
    "gradient",
    "differential",
    "op_norm",
    "jacobian",
    "integrate",
    "truncate",
    "sphere_trace",
    "interpolate",
    "sphere_points",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box domain [lo_1, hi_1] x ... x [lo_n, hi_n]."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box lo/hi dimension mismatch")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError("degenerate box")


@dataclass(frozen=True)
class Ball:
    """Euclidean ball; also used for sphere traces and ball extrema."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True, eq=False)
class Grid:
    """Cell-centered uniform lattice with a domain mask.

    ``shape`` counts cells per axis, ``spacing`` is the common cell width h,
    and ``mask`` marks the cells whose center lies inside the domain.  The
    domain measure is exactly (masked cell count) * h**dim.  ``domain``
    records the box/ball descriptor when the grid was built from one
    (needed to serialize fields); mask-restricted grids carry None.
    """

    dim: int
    shape: tuple[int, ...]
    origin: tuple[float, ...]
    spacing: float
    mask: np.ndarray
    domain: "Box | Ball | None" = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.shape) != self.dim or len(self.origin) != self.dim:
            raise ValueError("shape/origin do not match dim")
        if any(n < 2 for n in self.shape):
            raise ValueError("need at least 2 cells per axis")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if self.mask.shape != self.shape or self.mask.dtype != bool:
            raise ValueError("mask must be a boolean array of the grid shape")
        if not self.mask.any():
            raise ValueError("empty domain mask")

    @cached_property
    def cell_count(self) -> int:
        return int(self.mask.sum())

    @property
    def measure(self) -> float:
        return self.cell_count * self.cell_volume

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @cached_property
    def centers(self) -> np.ndarray:
        """Cell centers over the full box, shape ``shape + (dim,)``."""
        axes = [
            self.origin[a] + (np.arange(self.shape[a]) + 0.5) * self.spacing
            for a in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def masked_centers(self) -> np.ndarray:
        """Centers of masked cells, shape ``(cell_count, dim)``."""
        return self.centers[self.mask]

    @cached_property
    def boundary_adjacent(self) -> np.ndarray:
        """Masked cells missing a masked neighbor along some axis."""
        out = np.zeros(self.shape, dtype=bool)
        for a in range(self.dim):
            has_lo = _shift(self.mask, a, +1)
            has_hi = _shift(self.mask, a, -1)
            out |= self.mask & ~(has_lo & has_hi)
        return out

    def with_mask(self, new_mask: np.ndarray) -> "Grid":
        """Same lattice restricted to a sub-mask (drops the domain tag)."""
        new_mask = np.asarray(new_mask, dtype=bool)
        if not (new_mask & ~self.mask).sum() == 0:
            raise ValueError("new mask must be a subset of the current mask")
        return Grid(self.dim, self.shape, self.origin, self.spacing, new_mask, domain=None)

    def ball_mask(self, ball: Ball) -> np.ndarray:
        """Masked cells whose center lies in the open ball."""
        d2 = ((self.centers - np.asarray(ball.center)) ** 2).sum(axis=-1)
        return self.mask & (d2 < ball.radius**2)


def _shift(arr: np.ndarray, axis: int, by: int) -> np.ndarray:
    """Shift with zero/False fill (no wrap-around)."""
    out = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if by > 0:
        src[axis] = slice(0, arr.shape[axis] - by)
        dst[axis] = slice(by, None)
    else:
        src[axis] = slice(-by, None)
        dst[axis] = slice(0, arr.shape[axis] + by)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def build_grid(domain: Box | Ball, resolution: int | Sequence[int]) -> Grid:
    """Lay a cell-centered lattice over a box or ball domain.

    ``resolution`` gives cells per axis (a single int applies to every
    axis).  The spacing must come out uniform across axes, which for boxes
    requires the resolution to match the aspect ratio.
    """
    if isinstance(domain, Ball):
        dim = domain.dim
        lo = tuple(c - domain.radius for c in domain.center)
        hi = tuple(c + domain.radius for c in domain.center)
    else:
        dim = len(domain.lo)
        lo, hi = domain.lo, domain.hi
    if dim not in (2, 3):
        raise ValueError("only dimensions 2 and 3 are supported")

    if isinstance(resolution, int):
        res = (resolution,) * dim
    else:
        res = tuple(int(r) for r in resolution)
        if len(res) != dim:
            raise ValueError("resolution length does not match dimension")
    if any(r < 2 for r in res):
        raise ValueError("resolution must be at least 2 cells per axis")

    spacings = [(hi[a] - lo[a]) / res[a] for a in range(dim)]
    h = spacings[0]
    if any(abs(s - h) > 1e-12 * h for s in spacings[1:]):
        raise ValueError("non-uniform spacing; pick a resolution matching the box aspect")

    grid = Grid(dim, res, tuple(lo), float(h), np.ones(res, dtype=bool), domain=domain)
    if isinstance(domain, Ball):
        mask = grid.ball_mask(Ball(domain.center, domain.radius))
        if not mask.any():
            raise ValueError("ball domain contains no cell centers at this resolution")
        grid = Grid(dim, res, tuple(lo), float(h), mask, domain=domain)
    return grid


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values sampled at the masked cell centers of a grid.

    ``data`` is a full-box array; entries off the mask are NaN and never
    read.  ``nonnegative`` records that the field was produced as (or
    checked to be) >= 0, which the distribution-function machinery needs.
    """

    grid: Grid
    data: np.ndarray
    nonnegative: bool = False
    allow_infinite: bool = False  # only defect fields may carry +inf

    def __post_init__(self):
        if self.data.shape != self.grid.shape:
            raise ValueError("data shape does not match grid shape")
        vals = self.data[self.grid.mask]
        if self.allow_infinite:
            if np.isnan(vals).any() or (vals == -np.inf).any():
                raise ValueError("field values must not be NaN or -inf")
        elif not np.isfinite(vals).all():
            raise ValueError("field values must be finite on the mask")
        if self.nonnegative and (vals < 0).any():
            raise ValueError("field declared nonnegative but has negative values")

    @property
    def values(self) -> np.ndarray:
        """Masked values as a flat array (row-major cell order)."""
        return self.data[self.grid.mask]

    @classmethod
    def from_values(cls, grid: Grid, values: np.ndarray, **kw) -> "ScalarField":
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.cell_count,):
            raise ValueError("value count must equal masked cell count")
        data = np.full(grid.shape, np.nan)
        data[grid.mask] = values
        return cls(grid, data, **kw)

    def restrict(self, where: Ball | np.ndarray) -> "ScalarField":
        """Field restricted to a sub-domain (ball or boolean mask)."""
        submask = self.grid.ball_mask(where) if isinstance(where, Ball) else where
        sub = self.grid.with_mask(submask)
        data = np.where(submask, self.data, np.nan)
        return ScalarField(sub, data, self.nonnegative, self.allow_infinite)

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())


@dataclass(frozen=True, eq=False)
class VectorMap:
    """A sampled map into R^dim: one scalar component per coordinate."""

    grid: Grid
    data: np.ndarray  # shape grid.shape + (dim,)

    def __post_init__(self):
        if self.data.shape != self.grid.shape + (self.grid.dim,):
            raise ValueError("map data shape must be grid shape + (dim,)")
        if not np.isfinite(self.data[self.grid.mask]).all():
            raise ValueError("map values must be finite on the mask")

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, np.where(self.grid.mask, self.data[..., i], np.nan))

    @property
    def components(self) -> tuple[ScalarField, ...]:
        return tuple(self.component(i) for i in range(self.grid.dim))

    def with_component(self, i: int, comp: ScalarField) -> "VectorMap":
        data = self.data.copy()
        data[..., i] = comp.data
        return VectorMap(self.grid, data)

    def restrict(self, where: Ball | np.ndarray) -> "VectorMap":
        submask = self.grid.ball_mask(where) if isinstance(where, Ball) else where
        sub = self.grid.with_mask(submask)
        data = np.where(submask[..., None], self.data, np.nan)
        return VectorMap(sub, data)


@dataclass(frozen=True, eq=False)
class MatrixField:
    """A dim x dim matrix per masked cell (finite-difference derivatives)."""

    grid: Grid
    data: np.ndarray  # shape grid.shape + (dim, dim)

    def __post_init__(self):
        d = self.grid.dim
        if self.data.shape != self.grid.shape + (d, d):
            raise ValueError("matrix data shape must be grid shape + (dim, dim)")
        if not np.isfinite(self.data[self.grid.mask]).all():
            raise ValueError("matrix entries must be finite on the mask")


def sample(grid: Grid, evaluator: Callable) -> ScalarField | VectorMap:
    """Evaluate a point function at every masked cell center.

    The evaluator may be vectorized (accepting an ``(m, dim)`` array) or a
    plain per-point callable; scalar output yields a ScalarField, length-dim
    output a VectorMap.
    """
    pts = grid.masked_centers
    try:
        out = np.asarray(evaluator(pts), dtype=float)
        if out.shape not in ((len(pts),), (len(pts), grid.dim)):
            raise ValueError
    except Exception:
        rows = [evaluator(p) for p in pts]
        out = np.asarray(rows, dtype=float)
    if not np.isfinite(out).all():
        raise ValueError("evaluator produced non-finite values on the domain")
    if out.ndim == 1:
        return ScalarField.from_values(grid, out)
    data = np.full(grid.shape + (grid.dim,), np.nan)
    data[grid.mask] = out
    return VectorMap(grid, data)


def _axis_derivative(grid: Grid, data: np.ndarray, axis: int) -> np.ndarray:
    """Central difference where both neighbors are masked, one-sided at the
    mask boundary.  Exact on affine inputs either way."""
    h = grid.spacing
    mask = grid.mask
    filled = np.where(mask, data, 0.0)
    lo_val = _shift(filled, axis, +1)  # value at index - 1
    hi_val = _shift(filled, axis, -1)  # value at index + 1
    has_lo = _shift(mask, axis, +1)
    has_hi = _shift(mask, axis, -1)

    both = mask & has_lo & has_hi
    only_hi = mask & ~has_lo & has_hi
    only_lo = mask & has_lo & ~has_hi
    isolated = mask & ~has_lo & ~has_hi
    if isolated.any():
        raise ValueError(f"isolated masked cell along axis {axis}: no neighbor for differences")

    out = np.full(grid.shape, np.nan)
    out[both] = (hi_val[both] - lo_val[both]) / (2 * h)
    out[only_hi] = (hi_val[only_hi] - filled[only_hi]) / h
    out[only_lo] = (filled[only_lo] - lo_val[only_lo]) / h
    return out


def gradient(field: ScalarField) -> VectorMap:
    """Finite-difference gradient (surrogate for the weak gradient)."""
    grid = field.grid
    comps = [_axis_derivative(grid, field.data, a) for a in range(grid.dim)]
    return VectorMap(grid, np.stack(comps, axis=-1))


def differential(vm: VectorMap) -> MatrixField:
    """Row-wise finite-difference derivative matrix: D[i][j] = d f_i / d x_j."""
    grid = vm.grid
    d = grid.dim
    rows = []
    for i in range(d):
        comps = [_axis_derivative(grid, vm.data[..., i], a) for a in range(d)]
        rows.append(np.stack(comps, axis=-1))
    return MatrixField(grid, np.stack(rows, axis=-2))


def grad_norm(field: ScalarField) -> ScalarField:
    """Euclidean norm of the finite-difference gradient."""
    g = gradient(field)
    norm = np.sqrt((g.data**2).sum(axis=-1))
    return ScalarField(field.grid, np.where(field.grid.mask, norm, np.nan), nonnegative=True)


def _sym3_eig_max(a11, a22, a33, a12, a13, a23):
    """Largest eigenvalue of symmetric 3x3 matrices, trigonometric closed form."""
    p1 = a12**2 + a13**2 + a23**2
    q = (a11 + a22 + a33) / 3.0
    p2 = (a11 - q) ** 2 + (a22 - q) ** 2 + (a33 - q) ** 2 + 2.0 * p1
    p = np.sqrt(np.maximum(p2 / 6.0, 0.0))
    # det((A - q I) / p) / 2, guarded for the scalar-matrix case p == 0
    safe = np.where(p > 0, p, 1.0)
    b11, b22, b33 = (a11 - q) / safe, (a22 - q) / safe, (a33 - q) / safe
    b12, b13, b23 = a12 / safe, a13 / safe, a23 / safe
    detb = (
        b11 * (b22 * b33 - b23**2)
        - b12 * (b12 * b33 - b23 * b13)
        + b13 * (b12 * b23 - b22 * b13)
    )
    r = np.clip(detb / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    lam = q + 2.0 * p * np.cos(phi)
    return np.where(p2 > 0, lam, q)


def op_norm(mf: MatrixField) -> ScalarField:
    """Largest singular value per cell (closed forms, no LAPACK calls)."""
    grid = mf.grid
    m = mf.data
    if grid.dim == 2:
        a, b = m[..., 0, 0], m[..., 0, 1]
        c, d = m[..., 1, 0], m[..., 1, 1]
        q1 = a * a + b * b + c * c + d * d
        det = a * d - b * c
        disc = np.sqrt(np.maximum(q1 * q1 - 4.0 * det * det, 0.0))
        smax = np.sqrt(np.maximum((q1 + disc) / 2.0, 0.0))
    else:
        # Gram matrix M^T M is symmetric; largest eigenvalue via cubic.
        g = np.einsum("...ki,...kj->...ij", m, m)
        lam = _sym3_eig_max(
            g[..., 0, 0], g[..., 1, 1], g[..., 2, 2],
            g[..., 0, 1], g[..., 0, 2], g[..., 1, 2],
        )
        smax = np.sqrt(np.maximum(lam, 0.0))
    return ScalarField(grid, np.where(grid.mask, smax, np.nan), nonnegative=True)


def jacobian(mf: MatrixField) -> ScalarField:
    """Determinant per cell."""
    grid = mf.grid
    m = mf.data
    if grid.dim == 2:
        det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    else:
        det = (
            m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
            - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
            + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
        )
    return ScalarField(grid, np.where(grid.mask, det, np.nan))


def integrate(field: ScalarField) -> float:
    """Midpoint rule: h^dim times the sum over masked cells."""
    return float(field.values.sum() * field.grid.cell_volume)


def truncate(field: ScalarField, level: float, mode: str) -> ScalarField:
    """Nonnegative truncation: ``above`` gives (f - level)^+, ``below`` (level - f)^+."""
    if mode == "above":
        data = np.maximum(field.data - level, 0.0)
    elif mode == "below":
        data = np.maximum(level - field.data, 0.0)
    else:
        raise ValueError(f"mode must be 'above' or 'below', got {mode!r}")
    data = np.where(field.grid.mask, data, np.nan)
    return ScalarField(field.grid, data, nonnegative=True)


def interpolate(field: ScalarField, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation at points; every stencil cell must be masked."""
    grid = field.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    t = (pts - np.asarray(grid.origin)) / grid.spacing - 0.5
    i0 = np.floor(t).astype(int)
    frac = t - i0

    if (i0 < 0).any() or any((i0[:, a] + 1 >= grid.shape[a]).any() for a in range(grid.dim)):
        raise ValueError("interpolation point outside the sampled box")

    vals = np.zeros(len(pts))
    filled = np.where(grid.mask, field.data, np.nan)
    for corner in np.ndindex(*(2,) * grid.dim):
        idx = tuple(i0[:, a] + corner[a] for a in range(grid.dim))
        if not grid.mask[idx].all():
            raise ValueError("interpolation stencil leaves the masked domain")
        w = np.ones(len(pts))
        for a in range(grid.dim):
            w = w * (frac[:, a] if corner[a] else 1.0 - frac[:, a])
        vals += w * filled[idx]
    return vals


def sphere_points(ball: Ball, samples: int) -> np.ndarray:
    """Deterministic quadrature points on a sphere: uniform angles (dim 2)
    or a Fibonacci lattice (dim 3)."""
    if samples < 8:
        raise ValueError("need at least 8 sphere samples")
    c = np.asarray(ball.center, dtype=float)
    r = ball.radius
    if ball.dim == 2:
        theta = 2.0 * np.pi * np.arange(samples) / samples
        return c + r * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    j = np.arange(samples)
    z = 1.0 - 2.0 * (j + 0.5) / samples
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    golden = np.pi * (3.0 - math.sqrt(5.0))
    theta = golden * j
    return c + r * np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=-1)


def boundary_support_ok(field: ScalarField, cutoff: float = 1e-9) -> bool:
    """Grid surrogate for compact support: every boundary-adjacent cell
    value is below ``cutoff`` times the max magnitude."""
    vals = np.abs(field.values)
    vmax = float(vals.max(initial=0.0))
    if vmax == 0.0:
        return True
    edge = np.abs(field.data[field.grid.boundary_adjacent])
    return not bool((edge >= cutoff * vmax).any())


def sphere_trace(field: ScalarField, ball: Ball, samples: int) -> np.ndarray:
    """Field values interpolated at quadrature points of the sphere.

    Raises if the sphere's interpolation stencil touches unmasked cells,
    i.e. if the closed ball is not inside the sampled domain.
    """
    if ball.dim != field.grid.dim:
        raise ValueError("ball dimension does not match the grid")
    pts = sphere_points(ball, samples)
    return interpolate(field, pts)
