import json
import math

import numpy as np
import pytest

from distlab.cli import CommandPlan, UsageError, execute, main, parse_command
from distlab.fieldio import read_field, write_field
from distlab.fields import Ball, Box, ScalarField, build_grid, sample


def run(argv, capsys=None):
    code = main(argv)
    return code


def cone_file(tmp_path, res=64):
    g = build_grid(Ball((0.0, 0.0), 1.0), res)
    f = sample(g, lambda p: 1.0 - np.sqrt((p**2).sum(axis=-1)))
    path = tmp_path / "cone.json"
    write_field(f, path)
    return str(path)


# ------------------------------------------------------------------- parsing


def test_parse_gallery_list_default():
    plan = parse_command(["gallery", "--list"])
    assert plan.subcommand == "gallery"
    assert plan.options["list"]


def test_parse_sobolev_plan():
    plan = parse_command(["sobolev", "field.json", "--check", "superlevel"])
    assert plan.subcommand == "sobolev"
    assert plan.options["field"] == "field.json"
    assert plan.options["check"] == "superlevel"


def test_parse_errors():
    with pytest.raises(UsageError):
        parse_command([])
    with pytest.raises(UsageError):
        parse_command(["frobnicate"])
    with pytest.raises(UsageError):
        parse_command(["gallery", "--export", "cone"])  # missing --out
    with pytest.raises(UsageError):
        parse_command(["modulus", "--radii", "0.1"])  # neither file nor example
    with pytest.raises(UsageError):
        parse_command(["analyze", "m.json", "--p", "four"])


def test_main_usage_error_exit_code():
    assert main(["distortion"]) == 1  # unknown subcommand


# ------------------------------------------------------------------- gallery


def test_gallery_list_deterministic(capsys):
    assert main(["gallery", "--list"]) == 0
    first = capsys.readouterr().out
    assert main(["gallery", "--list"]) == 0
    second = capsys.readouterr().out
    assert first == second
    doc = json.loads(first)
    names = [e["name"] for e in doc["examples"]]
    assert "radial_log" in names and "x_over_norm" in names


def test_gallery_export_and_reload(tmp_path, capsys):
    out = tmp_path / "winding.json"
    code = main(
        ["gallery", "--export", "winding", "--params", "k=2", "--resolution", "32", "--out", str(out)]
    )
    assert code == 0
    vm = read_field(out)
    assert vm.grid.shape == (32, 32)


# ----------------------------------------------------- analyze round trip


def test_gallery_export_then_analyze(tmp_path, capsys):
    out = tmp_path / "radial_log.json"
    code = main(
        [
            "gallery", "--export", "radial_log", "--resolution", "128",
            "--with-data", "--out", str(out),
        ]
    )
    assert code == 0
    capsys.readouterr()
    report_path = tmp_path / "report.json"
    code = main(
        [
            "analyze", str(out),
            "--kfield", str(tmp_path / "radial_log.k.json"),
            "--sigmafield", str(tmp_path / "radial_log.sigma.json"),
            "--p", "4", "--q", "4", "--rel-tol", "0.03",
            "--violations-out", str(tmp_path / "viol.csv"),
            "--out", str(report_path),
        ]
    )
    assert code == 0
    doc = json.loads(report_path.read_text())
    assert doc["admissible"] is True
    # violations, if any, sit within two spacings of the declared singular
    # point at the origin
    viol = (tmp_path / "viol.csv").read_text().splitlines()[1:]
    vm = read_field(out)
    centers = vm.grid.masked_centers
    for line in viol:
        idx = int(line.split(",")[0])
        assert np.linalg.norm(centers[idx]) <= 2 * vm.grid.spacing


def test_analyze_default_data_is_self_consistent(tmp_path, capsys):
    out = tmp_path / "w.json"
    main(["gallery", "--export", "winding", "--params", "k=3", "--resolution", "48", "--out", str(out)])
    capsys.readouterr()
    code = main(["analyze", str(out), "--p", "4", "--q", "4"])
    captured = capsys.readouterr().out
    assert code == 0
    doc = json.loads(captured)
    assert doc["violation_count"] == 0  # minimal defect closes the inequality
    assert doc["sigma_source"].startswith("default")


# ------------------------------------------------------------------- sobolev


def test_sobolev_superlevel_cone(tmp_path, capsys):
    path = cone_file(tmp_path, 256)
    code = main(["sobolev", path, "--check", "superlevel"])
    out = capsys.readouterr().out
    assert code == 0
    doc = json.loads(out)
    (rep,) = doc["checks"]
    assert rep["holds"]
    assert rep["ratio"] == pytest.approx(1.0, abs=0.02)


def test_sobolev_band_requires_band_flag(tmp_path, capsys):
    path = cone_file(tmp_path)
    assert main(["sobolev", path, "--check", "band"]) == 1


def test_sobolev_all_checks(tmp_path, capsys):
    path = cone_file(tmp_path, 128)
    code = main(["sobolev", path, "--check", "all", "--band", "0.25,0.75"])
    doc = json.loads(capsys.readouterr().out)
    assert code == 0
    assert len(doc["checks"]) == 3
    assert doc["all_hold"]


# -------------------------------------------------------------- distribution


def test_distribution_report_and_exit_codes(tmp_path, capsys):
    path = cone_file(tmp_path, 64)
    curves = tmp_path / "curves.csv"
    levels = tmp_path / "levels.csv"
    code = main(
        [
            "distribution", path,
            "--tgrid", "0.25,0.5,0.75",
            "--curves-out", str(curves),
            "--levels-out", str(levels),
        ]
    )
    doc = json.loads(capsys.readouterr().out)
    assert code == 0
    assert doc["all_hold"]
    assert doc["cavalieri"]["holds"]
    assert levels.read_text().splitlines()[0] == "level,mass"
    rows = curves.read_text().splitlines()
    assert rows[0] == "t,mu_plus,mu_minus"
    assert len(rows) == 4


def test_distribution_negative_value_diagnostic(tmp_path, capsys):
    g = build_grid(Box((0.0, 0.0), (1.0, 1.0)), 4)
    vals = np.ones(g.cell_count)
    vals[5] = -2.0
    write_field(ScalarField.from_values(g, vals), tmp_path / "bad.json")
    code = main(["distribution", str(tmp_path / "bad.json")])
    err = capsys.readouterr().err
    assert code == 1
    assert "negative value" in err
    assert "(1, 1)" in err  # first offending cell named


# ------------------------------------------------------------------ staircase


def test_staircase_csv_and_json(tmp_path, capsys):
    path = cone_file(tmp_path, 32)
    code = main(["staircase", path, "--gamma", "0.5", "--epsilon", "0.4", "--format", "csv"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0] == "i,t,F"
    code = main(["staircase", path, "--gamma", "0.5", "--epsilon", "0.4"])
    doc = json.loads(capsys.readouterr().out)
    assert code == 0
    assert doc["gap_property_holds"]
    assert doc["case"] in ("hit", "interior")
    assert doc["s"] == pytest.approx(read_field(path).values.max())


# --------------------------------------------------------------- monotonicity


def test_monotonicity_sweep(tmp_path, capsys):
    path = cone_file(tmp_path, 128)
    code = main(
        ["monotonicity", path, "--center", "0,0", "--radii", "0.1,0.2,0.3,0.4"]
    )
    doc = json.loads(capsys.readouterr().out)
    assert code == 0
    assert doc["defect_fit"]["alpha"] == pytest.approx(1.0, rel=0.15)
    assert doc["osc_integral"]["value"] > 0


def test_monotonicity_chain_on_exported_map(tmp_path, capsys):
    out = tmp_path / "rl.json"
    main(["gallery", "--export", "radial_log", "--resolution", "128", "--out", str(out)])
    capsys.readouterr()
    code = main(
        [
            "monotonicity", str(out), "--chain",
            "--center", "0,0", "--chain-ball", "0.3",
            "--p", "4", "--q", "4",
        ]
    )
    doc = json.loads(capsys.readouterr().out)
    assert code == 0
    assert doc["holds_all"] is True


# ------------------------------------------------------------------- modulus


def test_modulus_example_radial_log(capsys):
    radii = ",".join(str(10.0**-k) for k in range(2, 7))
    code = main(
        ["modulus", "--example", "radial_log", "--center", "0,0", "--radii", radii]
    )
    doc = json.loads(capsys.readouterr().out)
    assert code == 0
    assert 0.45 <= doc["log_power_fit"]["beta"] <= 0.55


def test_modulus_from_map_file(tmp_path, capsys):
    g = build_grid(Box((-1.0, -1.0), (1.0, 1.0)), 64)
    vm = sample(g, lambda p: p)
    write_field(vm, tmp_path / "ident.json")
    code = main(
        ["modulus", str(tmp_path / "ident.json"), "--center", "0,0", "--radii", "0.1,0.2,0.4"]
    )
    doc = json.loads(capsys.readouterr().out)
    assert code == 0
    for entry in doc["curve"]:
        assert entry["omega"] == pytest.approx(entry["r"], rel=1e-9)


def test_sobolev_violation_exits_2(tmp_path, capsys):
    # a single unresolved spike violates the superlevel inequality on the
    # grid: sup = 1 but the gradient mass is only O(h)
    g = build_grid(Box((0.0, 0.0), (1.0, 1.0)), 32)
    vals = np.zeros(g.cell_count)
    vals[g.cell_count // 2] = 1.0
    write_field(ScalarField.from_values(g, vals), tmp_path / "spike.json")
    code = main(["sobolev", str(tmp_path / "spike.json"), "--check", "superlevel"])
    doc = json.loads(capsys.readouterr().out)
    assert code == 2
    assert not doc["all_hold"]


# ---------------------------------------------------------------- determinism


def test_identical_plans_byte_identical_reports(tmp_path):
    path = cone_file(tmp_path, 64)
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    for out in (out1, out2):
        plan = CommandPlan(
            "sobolev",
            {"field": path, "check": "superlevel", "band": None},
            str(out),
            "json",
        )
        assert execute(plan) == 0
    assert out1.read_bytes() == out2.read_bytes()
