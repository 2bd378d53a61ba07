import csv
import json

import numpy as np
import pytest

from turret_evasion import cli, sphere3d
from turret_evasion.errors import NumericalFailure

# norm of the tangent-region boundary point at gamma_max, from an independent root solve
TANGENT_PEAK = 4.603338848751701


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_region2d_outputs(tmp_path):
    out = tmp_path / "region"
    assert cli.main(["Region2D", "--out", str(out), "--set", "svg=true"]) == 0
    summary = {r["quantity"]: float(r["value"]) for r in _rows(out / "region_summary.csv")}
    assert summary["gamma_max"] == pytest.approx(4.493409457909064, abs=1e-9)
    assert summary["tangent_max_radius"] == pytest.approx(TANGENT_PEAK, abs=1e-9)
    curves = {r["curve"] for r in _rows(out / "region_boundaries.csv")}
    assert curves == {"radial", "tangent"}
    assert (out / "region.svg").read_text().startswith("<svg")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "complete" and manifest["seed"] == 0
    assert manifest["spec"]["params"]["v"] == 1.0
    assert set(manifest["files"]) == {"region_boundaries.csv", "region_summary.csv", "region.svg"}


def test_sweep2d_is_reproducible(tmp_path):
    spec = {"subcommand": "Sweep2D", "params": {"n_min": 1, "n_max": 5, "trials": 40}, "seed": 7}
    (tmp_path / "s.json").write_text(json.dumps(spec))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["--spec", str(tmp_path / "s.json"), "--out", str(a)]) == 0
    assert cli.main(["--spec", str(tmp_path / "s.json"), "--out", str(b), "--threads", "2"]) == 0
    for name in ("sweep_trials.csv", "sweep_means.csv", "sweep_constructions.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    means = _rows(a / "sweep_means.csv")
    assert len(means) == 5
    for r in means:
        assert float(r["optimal_mean"]) <= float(r["greedy_mean"]) + 1e-12
    assert len(_rows(a / "sweep_trials.csv")) == 200
    c = tmp_path / "c"
    assert cli.main(["--spec", str(tmp_path / "s.json"), "--out", str(c), "--seed", "8"]) == 0
    assert (a / "sweep_trials.csv").read_bytes() != (c / "sweep_trials.csv").read_bytes()


def test_toml_spec_and_sphere_paths(tmp_path):
    spec = tmp_path / "sphere.toml"
    spec.write_text(
        'subcommand = "SpherePaths"\n'
        f'output_path = "{tmp_path / "sp"}"\n'
        "[params]\n"
        'ns = [6, 9, 12]\ngenerators = ["fibonacci", "lloyd"]\nmetric = "pantilt"\nlloyd_iterations = 5\n'
    )
    assert cli.main(["--spec", str(spec)]) == 0
    out = tmp_path / "sp"
    rows = _rows(out / "sphere_paths.csv")
    assert len(rows) == 2 * 3 * 3
    by_key = {(r["generator"], r["n"], r["solver"]): float(r["total_radians"]) for r in rows}
    for g in ("fibonacci", "lloyd"):
        for n in ("6", "9", "12"):
            assert by_key[(g, n, "exact-dp")] <= by_key[(g, n, "nn+2opt")] + 1e-12
            assert by_key[(g, n, "nn+2opt")] <= by_key[(g, n, "nn")] + 1e-12
    matrix, header = sphere3d.read_tsplib(out / "tsplib" / "lloyd_9.tsp")
    assert matrix.shape == (11, 11)
    assert "phantom=11" in header["COMMENT"]
    assert len(_rows(out / "sphere_fit.csv")) == 4


def test_engagement3d_six_rows(tmp_path):
    out = tmp_path / "eng"
    assert cli.main(["Engagement3D", "--out", str(out), "--set", "n=6"]) == 0
    rows = _rows(out / "engagement.csv")
    assert [float(r["xi"]) for r in rows] == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert all(r["formation"] == "cylinder" and r["strategy"] == "direct" for r in rows)
    assert all(float(r["max_distance_m"]) > 0 for r in rows if r["status"] != "never")


def test_duo2d_small_grid(tmp_path):
    out = tmp_path / "duo"
    args = ["Duo2D", "--out", str(out), "--set", "num=3", "--set", "alpha_min=1.0",
            "--set", "alpha_max=2.0", "--set", "dt=0.001"]
    assert cli.main(args) == 0
    rows = _rows(out / "duo_curve.csv")
    assert len(rows) == 12
    best = _rows(out / "duo_best.csv")
    assert [r["strategy"] for r in best] == ["hybrid", "transition", "tangent"]


@pytest.mark.parametrize("args,spec,key", [
    (["Region2D"], {"colour": 1}, "colour"),
    (["Region2D"], {"params": {"speed": 2}}, "params.speed"),
    (["Region2D"], {"params": {"v": "fast"}}, "params.v"),
    (["Region2D"], {"params": {"v": -1.0}}, "params.v"),
    (["Sweep2D"], {"params": {"n_max": 40}}, "params.n_max"),
    (["Engagement3D"], {"params": {"xi": [0.0, 2.0]}}, "params.xi"),
    (["Engagement3D"], {"params": {"formation": "sphere"}}, "params.formation"),
    ([], {}, "subcommand"),
    (["Duo2D"], {"subcommand": "Region2D"}, "subcommand"),
    (["Region2D"], {"seed": -3}, "seed"),
])
def test_bad_spec_exit_code_names_key(tmp_path, capsys, args, spec, key):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(spec))
    out = tmp_path / "never"
    assert cli.main(args + ["--spec", str(path), "--out", str(out)]) == 2
    assert key in capsys.readouterr().err
    assert not out.exists()


def test_unparseable_spec(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("params = [")
    assert cli.main(["Region2D", "--spec", str(path)]) == 2
    assert "--spec" in capsys.readouterr().err


def test_numerical_failure_rolls_back(tmp_path, monkeypatch):
    def explode(params, seed, threads, out):
        out.csv("partial.csv", ("a",), [(1.0,)])
        raise NumericalFailure("no root")

    monkeypatch.setitem(cli.COMMANDS, "Region2D", explode)
    out = tmp_path / "fail"
    assert cli.main(["Region2D", "--out", str(out)]) == 3
    assert not out.exists()


def test_rollback_keeps_existing_directory(tmp_path, monkeypatch):
    def explode(params, seed, threads, out):
        out.csv("sub/partial.csv", ("a",), [(1.0,)])
        raise NumericalFailure("no root")

    monkeypatch.setitem(cli.COMMANDS, "Region2D", explode)
    (tmp_path / "keep.txt").write_text("x")
    assert cli.main(["Region2D", "--out", str(tmp_path)]) == 3
    assert sorted(p.name for p in tmp_path.iterdir()) == ["keep.txt"]


def test_resolve_spec_fills_defaults():
    spec = cli.resolve_spec({"params": {"xi": 0.5}}, "Engagement3D")
    assert spec["params"]["xi"] == [0.5]
    assert spec["params"]["n"] == 32
    assert spec["output_path"] == "out-Engagement3D"
    assert np.isclose(spec["params"]["dt"], 1 / 240)
