import json

import pytest

from heisqc.cli import EXIT_CONFIG, EXIT_OK, build_parser, run
from heisqc.experiments import EXPERIMENTS, TABLE_COLUMNS


def test_every_experiment_is_documented():
    assert set(TABLE_COLUMNS) == set(EXPERIMENTS)
    assert "tables.csv columns" in build_parser().format_help()


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "core"
    assert run(["--experiment", "verify-core", "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["experiment"] == "verify-core"
    assert report["summary"]["pass"] is True
    assert report["params"]["quad"]["n_alpha"] == 160
    assert (out / "tables.csv").read_text().startswith("table,")
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == len(report["summary"]["checks"]) + 1


def test_modulus_ring_parameters(tmp_path):
    out = tmp_path / "ring"
    assert run(["--experiment", "modulus", "--param", "a=0.5", "--param", "b=1.0", "--out", str(out)]) == EXIT_OK
    checks = {c["name"]: c for c in json.loads((out / "report.json").read_text())["summary"]["checks"]}
    ring = checks["ring_0.5_1"]["value"]
    assert ring["rel_error"] <= 1e-6


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("experiment = levelsets\nseed = 11\nquad.alpha = 40\nparams = {\"note\": \"x\"}\n")
    out = tmp_path / "lv"
    assert run(["--config", str(cfg), "--seed", "12", "--out", str(out)]) == EXIT_OK
    params = json.loads((out / "report.json").read_text())["params"]
    assert params["seed"] == 12 and params["quad"]["n_alpha"] == 40 and params["params"] == {"note": "x"}


@pytest.mark.parametrize("argv", [
    ["--experiment", "verify-core", "--quad.alpha", "1"],
    ["--experiment", "verify-core", "--tol", "0"],
    ["--experiment", "verify-core", "--param", "novalue"],
    ["--experiment", "distortion", "--map", "stretch", "--param", "map.beta=-1"],
    ["--experiment", "verify-core", "--calibration", "/nonexistent/file.cfg"],
    [],
])
def test_config_errors_exit_2(argv, tmp_path):
    assert run(argv + ["--out", str(tmp_path / "x")]) == EXIT_CONFIG


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment = levelsets\ncolour = blue\n")
    assert run(["--config", str(cfg)]) == EXIT_CONFIG


def test_argparse_rejects_unknown_experiment():
    with pytest.raises(SystemExit) as exc:
        run(["--experiment", "nope"])
    assert exc.value.code == EXIT_CONFIG


def test_single_map_restriction(tmp_path):
    out = tmp_path / "dist"
    rc = run(["--experiment", "distortion", "--map", "stretch", "--param", "map.beta=3", "--out", str(out)])
    assert rc == EXIT_OK
    cells = json.loads((out / "report.json").read_text())["cells"]
    k_rows = [c for c in cells if c["table"] == "distortion-inequality"]
    assert [c["map"] for c in k_rows] == ["stretch"]


def test_calibrate_is_reproducible(tmp_path, calib):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["--calibrate", "--out", str(a)]) == EXIT_OK
    assert run(["--calibrate", "--out", str(b)]) == EXIT_OK
    text = (a / "calibration.cfg").read_bytes()
    assert text == (b / "calibration.cfg").read_bytes()
    assert f"kappa_hat = {calib.kappa_hat!r}" in text.decode()
