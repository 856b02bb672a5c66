"""Command-line front end: field I/O, subcommand dispatch, report emission.

Exit codes: 0 on success, 1 on usage or I/O errors, 2 when a
claimed-always inequality is violated (distribution laws, staircase gap
property, Sobolev checks at their pinned tolerance, or a failing estimate
chain).  Reports are deterministic: identical invocations produce
byte-identical documents (fixed key order, no timestamps).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .distortion import (
    DistortionData,
    residual_defect,
    verify_distortion,
    violations_csv,
)
from .distribution import (
    cavalieri_residual,
    curves_csv,
    distribution_csv,
    neg_power_integral,
    pos_power_integral,
    upper_distribution,
    verify_level_bounds,
)
from .fieldio import FieldFormatError, read_field, write_field
from .fields import Ball, ScalarField, VectorMap, interpolate
from .gallery import (
    list_examples,
    make_example,
    sample_analytic_k,
    sample_analytic_sigma,
    sample_map,
)
from .monotonicity import (
    awm_defect,
    ball_extrema,
    dyadic_osc_integral,
    fit_defect_law,
    log_power_fit,
    modulus_curve,
    sup_bound_chain,
)
from .sobolev import band_bound_check, sharp_sobolev_check, superlevel_check
from .staircase import (
    inverse_distribution_fn,
    max_gap_deviation,
    staircase_approx,
    staircase_csv,
)

__all__ = ["CommandPlan", "UsageError", "parse_command", "execute", "main"]


class UsageError(Exception):
    pass


class _Failure(Exception):
    """Internal: carries a nonzero exit code with a message."""

    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class CommandPlan:
    subcommand: str
    options: dict
    out: str | None = None
    fmt: str = "json"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _exponent(text: str) -> float:
    if text in ("inf", "Inf", "INF"):
        return math.inf
    try:
        return float(text)
    except ValueError as exc:
        raise UsageError(f"expected a number or 'inf', got {text!r}") from exc


def _params(text: str) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"parameters look like key=value, got {item!r}")
        key, val = item.split("=", 1)
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise UsageError(f"parameter {key!r} needs a numeric value") from exc
    return out


def _build_parser() -> _Parser:
    parser = _Parser(prog="distlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"distlab {__version__}")
    sub = parser.add_subparsers(dest="subcommand")

    def common(p):
        p.add_argument("--out", default=None, help="write the report here (default stdout)")
        p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")

    g = sub.add_parser("gallery", help="list or export catalog examples")
    g.add_argument("--list", action="store_true")
    g.add_argument("--export", metavar="NAME")
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--params", type=str, default="")
    g.add_argument("--resolution", type=int, default=128)
    g.add_argument("--with-data", action="store_true", help="also export analytic K and Sigma fields")
    common(g)

    a = sub.add_parser("analyze", help="cellwise distortion-inequality report for a map")
    a.add_argument("map", help="map field file (components)")
    a.add_argument("--p", type=_exponent, default=math.inf)
    a.add_argument("--q", type=_exponent, default=math.inf)
    a.add_argument("--kfield", default=None, help="scalar field file with K (default: K = 1)")
    a.add_argument("--sigmafield", default=None, help="scalar field file with Sigma (default: minimal defect)")
    a.add_argument("--y0", type=_floats, default=None, help="target point for a value-of-finite-distortion check")
    a.add_argument("--rel-tol", type=float, default=None)
    a.add_argument("--violations-out", default=None)
    common(a)

    s = sub.add_parser("sobolev", help="sharp, superlevel and band inequality checks")
    s.add_argument("field", help="scalar field file")
    s.add_argument("--check", choices=("sharp", "superlevel", "band", "all"), default="all")
    s.add_argument("--band", type=_floats, default=None, metavar="A,B")
    common(s)

    d = sub.add_parser("distribution", help="distribution-function laws and exports")
    d.add_argument("field", help="scalar field file (nonnegative)")
    d.add_argument("--gammas", type=_floats, default=[0.25, 0.5, 0.75])
    d.add_argument("--powers", type=_floats, default=[0.5, 1.0, 2.0])
    d.add_argument("--avalues", type=_floats, default=None)
    d.add_argument("--tgrid", type=_floats, default=None)
    d.add_argument("--curves-out", default=None)
    d.add_argument("--levels-out", default=None, help="write the (level, mass) CSV here")
    common(d)

    t = sub.add_parser("staircase", help="staircase of the inverse distribution power")
    t.add_argument("field", help="scalar field file (nonnegative)")
    t.add_argument("--gamma", type=float, required=True)
    t.add_argument("--epsilon", type=float, required=True)
    t.add_argument("--max-steps", type=int, default=64)
    common(t)

    m = sub.add_parser("monotonicity", help="defect sweep, oscillation integral, estimate chain")
    m.add_argument("field", help="scalar field file (sweep) or map file (--chain)")
    m.add_argument("--center", type=_floats, default=None)
    m.add_argument("--radii", type=_floats, default=None)
    m.add_argument("--samples", type=int, default=None)
    m.add_argument("--osc-levels", type=int, default=6)
    m.add_argument("--osc-R", type=float, default=None)
    m.add_argument("--chain", action="store_true")
    m.add_argument("--chain-ball", type=float, default=None, help="radius of the chain ball around --center")
    m.add_argument("--component", type=int, default=0)
    m.add_argument("--level", type=float, default=None, help="truncation level (default: sphere-trace extremum)")
    m.add_argument("--mode", choices=("above", "below"), default="above")
    m.add_argument("--p", type=_exponent, default=4.0)
    m.add_argument("--q", type=_exponent, default=4.0)
    m.add_argument("--gamma", type=float, default=None)
    m.add_argument("--kfield", default=None)
    m.add_argument("--sigmafield", default=None)
    common(m)

    o = sub.add_parser("modulus", help="local modulus of continuity and log-power fit")
    o.add_argument("field", nargs="?", default=None, help="map file (interpolated evaluator)")
    o.add_argument("--example", default=None, help="use an analytic catalog evaluator instead")
    o.add_argument("--dim", type=int, default=2)
    o.add_argument("--params", type=str, default="")
    o.add_argument("--center", type=_floats, default=None)
    o.add_argument("--radii", type=_floats, required=True)
    o.add_argument("--samples", type=int, default=64)
    common(o)

    return parser


def parse_command(argv: list[str]) -> CommandPlan:
    """Validate argv into a plan; raises UsageError on bad input."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        raise UsageError("a subcommand is required (see --help)")
    opts = vars(ns).copy()
    sub = opts.pop("subcommand")
    out = opts.pop("out", None)
    fmt = opts.pop("fmt", "json")
    if sub == "gallery" and not opts["list"] and opts["export"] is None:
        opts["list"] = True
    if sub == "gallery" and opts["export"] is not None and out is None:
        raise UsageError("gallery --export needs --out PATH")
    if sub == "modulus" and (opts["field"] is None) == (opts["example"] is None):
        raise UsageError("modulus needs exactly one of a map file or --example NAME")
    return CommandPlan(sub, opts, out, fmt)


def _provenance(grid=None, **extra) -> dict:
    doc = {"version": __version__}
    if grid is not None:
        doc["resolution"] = list(grid.shape)
        doc["spacing"] = grid.spacing
    doc.update(extra)
    return doc


def _emit(plan: CommandPlan, text: str) -> None:
    if plan.out:
        with open(plan.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(plan: CommandPlan, doc: dict) -> None:
    _emit(plan, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _read_scalar(path) -> ScalarField:
    obj = read_field(path)
    if not isinstance(obj, ScalarField):
        raise _Failure(f"{path}: expected a scalar field (values), found a map", 1)
    return obj


def _read_map(path) -> VectorMap:
    obj = read_field(path)
    if not isinstance(obj, VectorMap):
        raise _Failure(f"{path}: expected a map (components), found a scalar field", 1)
    return obj


def _require_nonnegative(field: ScalarField, path: str) -> ScalarField:
    vals = field.values
    neg = vals < 0
    if neg.any():
        pos = int(np.argmax(neg))
        cell = tuple(int(c) for c in np.argwhere(field.grid.mask)[pos])
        raise _Failure(
            f"{path}: negative value {vals[pos]!r} at cell {cell}; "
            "distribution functions need a nonnegative field",
            1,
        )
    return ScalarField(field.grid, field.data, nonnegative=True)


# ------------------------------------------------------------------ handlers


def _cmd_gallery(plan: CommandPlan) -> int:
    opts = plan.options
    if opts["export"] is None:
        _emit_json(plan, {"examples": list_examples(), "provenance": _provenance()})
        return 0
    ex = make_example(opts["export"], dim=opts["dim"], **_params(opts["params"]))
    sampled = sample_map(ex, opts["resolution"])
    write_field(sampled, plan.out)
    written = [plan.out]
    if opts["with_data"]:
        if ex.analytic_k is None or ex.analytic_sigma is None:
            raise _Failure(f"example {ex.name!r} carries no analytic distortion data", 1)
        base = plan.out[: -len(".json")] if plan.out.endswith(".json") else plan.out
        kpath, spath = base + ".k.json", base + ".sigma.json"
        write_field(sample_analytic_k(ex, sampled.grid), kpath)
        write_field(sample_analytic_sigma(ex, sampled.grid), spath)
        written += [kpath, spath]
    sys.stdout.write(json.dumps({"written": written}, sort_keys=True) + "\n")
    return 0


def _cmd_analyze(plan: CommandPlan) -> int:
    opts = plan.options
    vm = _read_map(opts["map"])
    grid = vm.grid
    if opts["kfield"] is not None:
        K = _read_scalar(opts["kfield"])
        K = ScalarField(grid, K.data, nonnegative=True)
        k_source = opts["kfield"]
    else:
        K = ScalarField.from_values(grid, np.ones(grid.cell_count), nonnegative=True)
        k_source = "default: K = 1"
    if opts["sigmafield"] is not None:
        S = _read_scalar(opts["sigmafield"])
        S = ScalarField(grid, S.data, nonnegative=True, allow_infinite=True)
        s_source = opts["sigmafield"]
    else:
        S = residual_defect(vm, K)
        s_source = "default: minimal defect for the given K"
    data = DistortionData(K, S, opts["p"], opts["q"])
    rep = verify_distortion(vm, data, y0=opts["y0"], rel_tol=opts["rel_tol"])
    if opts["violations_out"]:
        with open(opts["violations_out"], "w") as fh:
            fh.write(violations_csv(rep))
    doc = rep.as_dict()
    doc["admissible"] = data.admissible
    doc["k_source"] = k_source
    doc["sigma_source"] = s_source
    doc["provenance"] = _provenance(grid)
    _emit_json(plan, doc)
    return 0


def _cmd_sobolev(plan: CommandPlan) -> int:
    opts = plan.options
    field = _read_scalar(opts["field"])
    which = opts["check"]
    reports = []
    if which in ("sharp", "all"):
        reports.append(sharp_sobolev_check(field))
    if which in ("superlevel", "all"):
        reports.append(superlevel_check(_require_nonnegative(field, opts["field"])))
    if which == "band" or (which == "all" and opts["band"] is not None):
        if opts["band"] is None or len(opts["band"]) != 2:
            raise UsageError("band check needs --band A,B")
        a, b = opts["band"]
        reports.append(band_bound_check(_require_nonnegative(field, opts["field"]), a, b))
    doc = {
        "checks": [r.as_dict() for r in reports],
        "all_hold": all(r.holds for r in reports),
        "provenance": _provenance(field.grid),
    }
    _emit_json(plan, doc)
    return 0 if doc["all_hold"] else 2


def _cmd_distribution(plan: CommandPlan) -> int:
    opts = plan.options
    field = _require_nonnegative(_read_scalar(opts["field"]), opts["field"])
    dist = upper_distribution(field)
    total = dist.total

    integral, area_up, area_lo = cavalieri_residual(field)
    scale = max(abs(integral), 1e-30)
    cavalieri_ok = abs(area_up - integral) <= 1e-12 * scale and abs(area_lo - integral) <= 1e-12 * scale

    avals = opts["avalues"]
    if avals is None:
        avals = [0.0, total / 4, total / 2, 3 * total / 4, total]
    bounds = verify_level_bounds(field, avals)

    neg = []
    for gamma in opts["gammas"]:
        if not 0 < gamma < 1:
            raise UsageError(f"--gammas entries must lie in (0, 1), got {gamma}")
        up = neg_power_integral(field, gamma, "upper")
        lo = neg_power_integral(field, gamma, "lower")
        neg.append({"gamma": gamma, "upper": up.as_dict(), "lower": lo.as_dict()})
    pos = []
    for r in opts["powers"]:
        if r <= 0:
            raise UsageError(f"--powers entries must be positive, got {r}")
        up = pos_power_integral(field, r, "upper")
        lo = pos_power_integral(field, r, "lower")
        pos.append({"r": r, "upper": up.as_dict(), "lower": lo.as_dict()})

    all_hold = (
        cavalieri_ok
        and all(b.holds for b in bounds)
        and all(e["upper"]["holds"] and e["lower"]["holds"] for e in neg + pos)
    )

    if opts["levels_out"]:
        with open(opts["levels_out"], "w") as fh:
            fh.write(distribution_csv(dist))
    curves = None
    if opts["tgrid"] is not None:
        curves = curves_csv(dist, opts["tgrid"])
        if opts["curves_out"]:
            with open(opts["curves_out"], "w") as fh:
                fh.write(curves)

    doc = {
        "total_measure": total,
        "cavalieri": {
            "integral": integral,
            "area_upper": area_up,
            "area_lower": area_lo,
            "holds": cavalieri_ok,
        },
        "level_bounds": [
            {
                "a": b.a,
                "lower_set_measure": b.lower_set_measure,
                "upper_set_measure": b.upper_set_measure,
                "holds": b.holds,
            }
            for b in bounds
        ],
        "neg_power_integrals": neg,
        "pos_power_integrals": pos,
        "all_hold": all_hold,
        "provenance": _provenance(field.grid),
    }
    if curves is not None and not opts["curves_out"]:
        doc["curves_csv"] = curves
    _emit_json(plan, doc)
    return 0 if all_hold else 2


def _cmd_staircase(plan: CommandPlan) -> int:
    opts = plan.options
    field = _require_nonnegative(_read_scalar(opts["field"]), opts["field"])
    F = inverse_distribution_fn(field, opts["gamma"])
    result = staircase_approx(F, opts["epsilon"], opts["max_steps"])
    deviation = max_gap_deviation(F, result)
    ok = deviation <= opts["epsilon"] * (1 + 1e-12)
    if plan.fmt == "csv":
        _emit(plan, staircase_csv(F, result))
    else:
        _emit_json(
            plan,
            {
                "s": result.s,
                "case": result.case,
                "epsilon": result.epsilon,
                "breakpoints": [float(t) for t in result.breakpoints],
                "values": [float(F(t)) for t in result.breakpoints],
                "max_gap_deviation": deviation,
                "gap_property_holds": ok,
                "provenance": _provenance(field.grid, gamma=opts["gamma"]),
            },
        )
    return 0 if ok else 2


def _cmd_monotonicity(plan: CommandPlan) -> int:
    opts = plan.options
    obj = read_field(opts["field"])
    grid = obj.grid
    center = opts["center"]
    if center is None:
        center = [grid.origin[a] + grid.shape[a] * grid.spacing / 2 for a in range(grid.dim)]
    center = tuple(center)

    if opts["chain"]:
        if not isinstance(obj, VectorMap):
            raise _Failure("--chain needs a map file (components)", 1)
        if opts["chain_ball"] is None:
            raise _Failure("--chain needs --chain-ball R", 1)
        ball = Ball(center, opts["chain_ball"])
        comp = obj.component(opts["component"])
        ext = ball_extrema(comp, ball, opts["samples"])
        level = opts["level"]
        if level is None:
            level = ext.boundary_max if opts["mode"] == "above" else ext.boundary_min
        sub = obj.restrict(grid.ball_mask(ball))
        if opts["kfield"] is not None:
            K = ScalarField(sub.grid, _read_scalar(opts["kfield"]).data, nonnegative=True)
        else:
            K = ScalarField.from_values(sub.grid, np.ones(sub.grid.cell_count), nonnegative=True)
        if opts["sigmafield"] is not None:
            S = ScalarField(sub.grid, _read_scalar(opts["sigmafield"]).data, nonnegative=True)
        else:
            S = residual_defect(sub, K)
        data = DistortionData(K, S, opts["p"], opts["q"])
        ledger = sup_bound_chain(
            sub, data, opts["component"], level, opts["mode"], gamma=opts["gamma"]
        )
        doc = ledger.as_dict()
        doc["ball"] = {"center": list(center), "radius": opts["chain_ball"]}
        doc["provenance"] = _provenance(grid)
        if plan.fmt == "csv":
            _emit(plan, ledger.csv())
        else:
            _emit_json(plan, doc)
        return 0 if ledger.holds_all else 2

    if not isinstance(obj, ScalarField):
        raise _Failure("the defect sweep needs a scalar field file (or pass --chain)", 1)
    if opts["radii"] is None:
        raise UsageError("the defect sweep needs --radii a,b,c")
    radii = sorted(opts["radii"])
    defects = [
        {"r": r, "defect": awm_defect(obj, Ball(center, r), opts["samples"])} for r in radii
    ]
    fit = fit_defect_law(obj, center, radii, opts["samples"])
    osc_R = opts["osc_R"] if opts["osc_R"] is not None else max(radii)
    osc = dyadic_osc_integral(obj, center, osc_R, opts["osc_levels"])
    doc = {
        "center": list(center),
        "defects": defects,
        "defect_fit": fit.as_dict(),
        "osc_integral": {"R": osc_R, "levels": opts["osc_levels"], "value": osc},
        "provenance": _provenance(grid),
    }
    _emit_json(plan, doc)
    return 0


def _cmd_modulus(plan: CommandPlan) -> int:
    opts = plan.options
    if opts["example"] is not None:
        ex = make_example(opts["example"], dim=opts["dim"], **_params(opts["params"]))
        if ex.is_scalar:
            raise _Failure("modulus needs a map example", 1)
        evaluator = ex.evaluator
        dim = ex.dim
        grid = None
    else:
        vm = _read_map(opts["field"])
        dim = vm.grid.dim
        grid = vm.grid
        comps = vm.components

        def evaluator(pts, comps=comps):
            return np.stack([interpolate(c, pts) for c in comps], axis=-1)

    center = opts["center"] if opts["center"] is not None else [0.0] * dim
    curve = modulus_curve(evaluator, center, opts["radii"], opts["samples"])
    try:
        fit = log_power_fit(curve).as_dict()
    except ValueError as exc:
        fit = {"error": str(exc)}
    doc = {
        "center": list(center),
        "curve": [{"r": r, "omega": w} for r, w in curve],
        "log_power_fit": fit,
        "provenance": _provenance(grid, samples=opts["samples"]),
    }
    _emit_json(plan, doc)
    return 0


_HANDLERS = {
    "gallery": _cmd_gallery,
    "analyze": _cmd_analyze,
    "sobolev": _cmd_sobolev,
    "distribution": _cmd_distribution,
    "staircase": _cmd_staircase,
    "monotonicity": _cmd_monotonicity,
    "modulus": _cmd_modulus,
}


def execute(plan: CommandPlan) -> int:
    """Run a validated plan; returns the process exit code."""
    try:
        return _HANDLERS[plan.subcommand](plan)
    except _Failure as exc:
        sys.stderr.write(f"distlab: {exc}\n")
        return exc.code
    except (UsageError, FieldFormatError, OSError, ValueError) as exc:
        sys.stderr.write(f"distlab: {exc}\n")
        return 1


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        plan = parse_command(argv)
    except UsageError as exc:
        sys.stderr.write(f"distlab: {exc}\n")
        return 1
    code = execute(plan)
    return code


if __name__ == "__main__":
    sys.exit(main())
