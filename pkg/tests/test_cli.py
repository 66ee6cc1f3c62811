from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from amoebakit.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_NUMERIC, EXIT_OK, main
from amoebakit.raster import read_pnm


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv("AMOEBA_SEED", raising=False)


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


BLOW = {"schema_version": 1, "name": "blow", "k": 1, "components": ["t1", "exp(exp(t1))"], "multiplicity": {"log": 1}}


def test_jacobian_check(capsys):
    assert main(["jacobian-check", "--builtin", "real-plane", "--samples", "500"]) == EXIT_OK
    rep = _json(capsys)
    assert rep["passed"] and rep["samples"] == 500 and rep["seed"] == 0


def test_seed_env_overrides_flag(capsys, monkeypatch):
    monkeypatch.setenv("AMOEBA_SEED", "17")
    assert main(["jacobian-check", "--builtin", "real-line", "--samples", "50", "--seed", "3"]) == EXIT_OK
    assert _json(capsys)["seed"] == 17
    monkeypatch.setenv("AMOEBA_SEED", "x")
    assert main(["jacobian-check", "--builtin", "real-line"]) == EXIT_CONFIG


def test_volume_report_and_expectation(capsys, tmp_path):
    out = tmp_path / "v.json"
    assert main(["volume", "--builtin", "real-line", "--samples", "70000", "--out", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert {"value", "stderr", "samples", "multiplicity", "box", "seed"} <= set(rep)
    assert rep["multiplicity"] == 2
    assert main(["volume", "--builtin", "real-line", "--samples", "70000", "--expect", "100"]) == EXIT_FAIL
    assert _json(capsys)["within_tolerance"] is False


def test_volume_box_sampler(capsys):
    code = main(["volume", "--builtin", "exp-curve", "--samples", "20000", "--box", "3", "--target", "coamoeba", "--multiplicity", "1"])
    assert code == EXIT_OK
    assert _json(capsys)["box"]["kind"] == "box"


def test_volume_ladder(capsys):
    code = main(["volume", "--builtin", "exp-curve", "--samples", "30000", "--ladder", "5,10,20,40", "--expect-kind", "divergent"])
    assert code == EXIT_OK
    assert _json(capsys)["kind"] == "divergent"


def test_numerical_failure_exit_code(tmp_path):
    path = _write(tmp_path, "blow.json", BLOW)
    assert main(["volume", "--spec", path, "--samples", "100000", "--box", "10"]) == EXIT_NUMERIC


def test_config_errors(tmp_path, capsys):
    bad = _write(tmp_path, "bad.json", {"schema_version": 2})
    for cmd in ("volume", "fibers", "limitset", "jacobian-check", "plane"):
        assert main([cmd, "--spec", bad]) == EXIT_CONFIG, cmd
    assert main(["raster", "--spec", bad, "--out", str(tmp_path / "x.pgm")]) == EXIT_CONFIG
    assert not (tmp_path / "x.pgm").exists()
    assert main(["volume", "--builtin", "nope"]) == EXIT_CONFIG
    assert main(["volume"]) == EXIT_CONFIG
    assert main(["volume", "--builtin", "circle-curve", "--samples", "100"]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["volume", "--target", "neither"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2


def test_fibers_at_point(capsys):
    assert main(["fibers", "--builtin", "real-line", "--at=-0.5+0.8660254037844386i", "--expect-count", "2"]) == EXIT_OK
    rep = _json(capsys)
    assert rep["count"] == 2 and rep["regularity"] == "regular"
    assert main(["fibers", "--builtin", "real-line", "--map", "arg", "--at", "i", "--expect-count", "2"]) == EXIT_FAIL
    assert main(["fibers", "--builtin", "real-line", "--at", "1,2"]) == EXIT_CONFIG


def test_fibers_probes(capsys):
    assert main(["fibers", "--builtin", "nonreal-line", "--probes", "4"]) == EXIT_OK
    rep = _json(capsys)
    assert rep["p"] == rep["P"] == "1"


def test_limitset_csv(tmp_path, capsys):
    out = tmp_path / "ls.csv"
    png = tmp_path / "ls.png"
    code = main(["limitset", "--builtin", "circle-curve", "--samples", "50000", "--out", str(out), "--png", str(png), "--expect-points", "3", "--expect-arcs", "0"])
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["u1", "u2", "weight", "spread", "rationality", "arc_id"]
    assert len(rows) == 4
    assert {r[4] for r in rows[1:]} == {"rational(1 1)", "rational(0 -1)", "rational(-1 0)"}
    assert png.read_bytes()[:4] == b"\x89PNG"
    assert main(["limitset", "--builtin", "circle-curve", "--samples", "50000", "--expect-arcs", "1"]) == EXIT_FAIL


def test_raster_outputs(tmp_path, capsys):
    out, png = tmp_path / "a.pgm", tmp_path / "a.png"
    args = ["raster", "--builtin", "real-line", "--bounds", "-6", "6", "-6", "6", "--res", "64x32", "--samples", "50000", "--out", str(out), "--png", str(png)]
    assert main(args) == EXIT_OK
    rep = _json(capsys)
    magic, w, h, _ = read_pnm(out.read_bytes())
    assert (magic, w, h) == ("P5", 64, 32)
    assert rep["resolution"] == [64, 32]
    assert png.read_bytes()[:4] == b"\x89PNG"
    ppm = tmp_path / "c.ppm"
    assert main(["raster", "--builtin", "real-line", "--mode", "coamoeba", "--res", "32", "--samples", "20000", "--out", str(ppm)]) == EXIT_OK
    assert ppm.read_bytes()[:2] == b"P6"
    assert main(["raster", "--builtin", "real-line", "--pair", "1,3", "--out", str(out)]) == EXIT_CONFIG


def test_raster_polynomial(tmp_path, capsys):
    spec = _write(tmp_path, "p.json", {"schema_version": 1, "polynomial": {"coefficients": {"0,0": 1, "1,0": 1, "0,1": 1}}})
    out = tmp_path / "p.pgm"
    assert main(["raster", "--spec", spec, "--res", "64", "--samples", "5000", "--out", str(out)]) == EXIT_OK
    assert _json(capsys)["skipped_columns"] == 0
    assert main(["raster", "--spec", spec, "--mode", "coamoeba", "--out", str(out)]) == EXIT_CONFIG


def test_plane_command(capsys):
    assert main(["plane", "--coeffs", '{"k":1,"b":["1","i"],"a":[["1"],["2"]]}', "--fibers", "3"]) == EXIT_OK
    rep = _json(capsys)
    assert rep["real"] is False
    assert rep["expected_counts"] == {"arg": 1, "log": 1}
    assert rep["fibers"]["match_expected"] is True
    assert main(["plane", "--builtin", "real-plane"]) == EXIT_OK
    assert _json(capsys)["expected_counts"] == {"arg": 1, "log": 4}
    assert main(["plane", "--coeffs", "{nope"]) == EXIT_CONFIG
    assert main(["plane", "--builtin", "exp-curve"]) == EXIT_CONFIG
    assert main(["plane", "--builtin", "nonreal-line", "--volume"]) == EXIT_CONFIG


def test_gallery_subset(tmp_path, capsys):
    code = main(["gallery", "--out", str(tmp_path), "--only", "nonreal-line"])
    assert code == EXIT_OK
    assert "nonreal-line" in capsys.readouterr().out
    assert (tmp_path / "results.json").exists()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "amoebakit", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("volume", "fibers", "limitset", "raster", "plane", "jacobian-check", "gallery"):
        assert cmd in proc.stdout
    assert "P5" in proc.stdout
