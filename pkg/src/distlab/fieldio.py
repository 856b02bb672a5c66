"""Text file format for sampled fields and maps.

One JSON document per field: geometry (dim, shape, origin, spacing, domain),
then either ``values`` (scalar) or ``components`` (one array per coordinate),
row-major over the full box with ``null`` at unmasked cells.  Floats pass
through ``repr`` round-tripping, so save/load is bit-exact.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .fields import Ball, Box, Grid, ScalarField, VectorMap, build_grid

__all__ = [
    "FieldFormatError",
    "field_document",
    "field_from_document",
    "write_field",
    "read_field",
]


class FieldFormatError(ValueError):
    """Malformed or unserializable field document."""


def _domain_descriptor(grid: Grid):
    dom = grid.domain
    if isinstance(dom, Box):
        return "box"
    if isinstance(dom, Ball):
        return {"ball": {"center": list(dom.center), "radius": dom.radius}}
    raise FieldFormatError(
        "only grids built from a box or ball domain are serializable"
    )


def _array_with_nulls(grid: Grid, data: np.ndarray) -> list:
    flat = data.reshape(-1)
    mask = grid.mask.reshape(-1)
    return [float(v) if m else None for v, m in zip(flat, mask)]


def field_document(obj: ScalarField | VectorMap) -> dict:
    grid = obj.grid
    doc = {
        "dim": grid.dim,
        "shape": list(grid.shape),
        "origin": [float(x) for x in grid.origin],
        "spacing": grid.spacing,
        "domain": _domain_descriptor(grid),
    }
    if isinstance(obj, ScalarField):
        doc["values"] = _array_with_nulls(grid, obj.data)
    else:
        doc["components"] = [
            _array_with_nulls(grid, obj.data[..., i]) for i in range(grid.dim)
        ]
    return doc


def _rebuild_grid(doc: dict) -> Grid:
    try:
        dim = int(doc["dim"])
        shape = tuple(int(s) for s in doc["shape"])
        origin = tuple(float(x) for x in doc["origin"])
        spacing = float(doc["spacing"])
        domain = doc["domain"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldFormatError(f"missing or malformed geometry key: {exc}") from exc
    if len(shape) != dim or len(origin) != dim:
        raise FieldFormatError("shape/origin length does not match dim")
    hi = tuple(origin[a] + shape[a] * spacing for a in range(dim))
    if domain == "box":
        dom = Box(origin, hi)
    elif isinstance(domain, dict) and "ball" in domain:
        ball = domain["ball"]
        try:
            dom = Ball(tuple(float(c) for c in ball["center"]), float(ball["radius"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FieldFormatError("malformed ball domain") from exc
    else:
        raise FieldFormatError(f"unknown domain descriptor {domain!r}")
    grid = build_grid(dom, shape)
    if grid.shape != shape or abs(grid.spacing - spacing) > 1e-12 * spacing:
        raise FieldFormatError("domain, shape and spacing are inconsistent")
    if any(abs(a - b) > 1e-12 * max(1.0, abs(b)) for a, b in zip(grid.origin, origin)):
        raise FieldFormatError("origin does not match the domain box")
    return grid


def _parse_array(grid: Grid, arr, name: str) -> np.ndarray:
    if not isinstance(arr, list) or len(arr) != int(np.prod(grid.shape)):
        raise FieldFormatError(f"{name} must be a row-major list of {np.prod(grid.shape)} entries")
    flat_mask = grid.mask.reshape(-1)
    out = np.full(len(arr), np.nan)
    for idx, (v, m) in enumerate(zip(arr, flat_mask)):
        if v is None:
            if m:
                cell = np.unravel_index(idx, grid.shape)
                raise FieldFormatError(f"{name}: null at masked cell {tuple(int(c) for c in cell)}")
            continue
        if not m:
            cell = np.unravel_index(idx, grid.shape)
            raise FieldFormatError(f"{name}: value at unmasked cell {tuple(int(c) for c in cell)}")
        fv = float(v)
        if not math.isfinite(fv):
            cell = np.unravel_index(idx, grid.shape)
            raise FieldFormatError(f"{name}: non-finite value at cell {tuple(int(c) for c in cell)}")
        out[idx] = fv
    return out.reshape(grid.shape)


def field_from_document(doc: dict) -> ScalarField | VectorMap:
    grid = _rebuild_grid(doc)
    has_values = "values" in doc
    has_components = "components" in doc
    if has_values == has_components:
        raise FieldFormatError("document must carry exactly one of 'values' or 'components'")
    if has_values:
        return ScalarField(grid, _parse_array(grid, doc["values"], "values"))
    comps = doc["components"]
    if not isinstance(comps, list) or len(comps) != grid.dim:
        raise FieldFormatError(f"need exactly {grid.dim} components")
    data = np.stack(
        [_parse_array(grid, comp, f"components[{i}]") for i, comp in enumerate(comps)],
        axis=-1,
    )
    return VectorMap(grid, data)


def write_field(obj: ScalarField | VectorMap, path) -> None:
    with open(path, "w") as fh:
        json.dump(field_document(obj), fh)
        fh.write("\n")


def read_field(path) -> ScalarField | VectorMap:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FieldFormatError(f"not a JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise FieldFormatError("top-level document must be an object")
    return field_from_document(doc)
