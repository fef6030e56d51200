import csv
import json
import math
import io
import subprocess
import sys

import pytest
import yaml

from eprsim.cli import main

PI = math.pi


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_simulate_preset_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, err = run_cli(
        ["simulate", "--preset", "fig9", "--output", str(out)], capsys
    )
    assert code == 0, err
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 17
    assert rows[0]["phi"] == "0.0"
    assert float(rows[0]["c_hat"]) == 1.0


def test_simulate_byte_identical_reruns(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run_cli(
            ["simulate", "--preset", "aspect-pi15", "--output", str(path)], capsys
        )
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_json_format(capsys):
    code, out, _ = run_cli(
        ["simulate", "--space", "sphere", "--t", "5000", "--seed", "3",
         "--phi-stop", "1.5707963", "--phi-step", "0.3926990", "--format", "json"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["config"]["t_per_point"] == 5000
    assert len(payload["records"]) == 5


def test_simulate_requires_space(capsys):
    code, _, err = run_cli(["simulate", "--t", "100"], capsys)
    assert code == 2
    assert "space" in err


def test_simulate_invalid_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("space: sphere\nphi_grid: {start: 0.0, stop: 9.0, step: 0.5}\n")
    code, _, err = run_cli(["simulate", "--config", str(cfg)], capsys)
    assert code == 2
    assert "error" in err


def test_config_file_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        "space: sphere\nt_per_point: 4000\nseed: 9\n"
        "phi_grid: {start: 0.0, stop: 0.8, step: 0.4}\n"
    )
    code, out, _ = run_cli(
        ["simulate", "--t", "77", "--config", str(cfg), "--format", "json"], capsys
    )
    assert code == 0
    assert json.loads(out)["config"]["t_per_point"] == 4000


def test_simulate_undefined_estimates_exit_3(capsys):
    code, out, _ = run_cli(
        ["simulate", "--space", "sphere", "--band-a", "1.396", "--band-b", "1.396",
         "--t", "1000", "--seed", "5",
         "--phi-start", "1.37", "--phi-stop", "1.77", "--phi-step", "0.1"],
        capsys,
    )
    assert code == 3
    assert "nan" in out  # affected rows are still emitted


def test_bell_exact_json(capsys):
    half = math.asin(0.3)
    code, out, _ = run_cli(
        ["bell", "--space", "sphere", "--exact", "--mode", "tobs",
         "--band-a", repr(half), "--band-b", repr(half)],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["statistic"] == pytest.approx(3.5910626399823435, abs=1e-9)
    assert payload["violated"] is True


def test_bell_monte_carlo_simple(capsys):
    code, out, _ = run_cli(
        ["bell", "--space", "sphere", "--test", "simple", "--mode", "t",
         "--t", "50000", "--seed", "2"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert len(payload["terms"]) == 3
    assert abs(payload["statistic"]) < 0.01


def test_bell_angle_count_validation(capsys):
    code, _, err = run_cli(
        ["bell", "--space", "sphere", "--angles", "0,1", "--t", "100"], capsys
    )
    assert code == 2
    assert "angles" in err


def test_bell_singles_flagged_non_canonical(capsys):
    code, out, _ = run_cli(
        ["bell", "--space", "sphere", "--mode", "singles", "--t", "20000"], capsys
    )
    assert code == 0
    payload = json.loads(out)
    assert "non-canonical" in payload["singles_denominator"]


def test_oracle_single_phi(capsys):
    code, out, _ = run_cli(
        ["oracle", "--space", "circle", "--arc-a", repr(PI / 15),
         "--phi", repr(PI / 8), "--format", "json"],
        capsys,
    )
    assert code == 0
    row = json.loads(out)[0]
    assert row["t_obs_fraction"] == pytest.approx(11.0 / 15.0, abs=1e-12)
    assert row["corr_tobs"] == pytest.approx(15.0 / 22.0, abs=1e-12)


def test_oracle_grid_csv(capsys):
    code, out, _ = run_cli(
        ["oracle", "--space", "sphere", "--phi-stop", repr(PI),
         "--phi-step", repr(PI / 4)],
        capsys,
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 5
    assert float(rows[0]["corr_t"]) == pytest.approx(1.0)
    assert float(rows[-1]["corr_t"]) == pytest.approx(-1.0)


def test_analyze_pipeline(tmp_path, capsys):
    sweep_csv = tmp_path / "sweep.csv"
    half = math.asin(0.2)
    code, _, _ = run_cli(
        ["simulate", "--space", "sphere", "--band-a", repr(half), "--band-b",
         repr(half), "--t", "100000", "--seed", "6", "--phi-stop",
         repr(PI / 2), "--phi-step", repr(PI / 16), "--output", str(sweep_csv)],
        capsys,
    )
    assert code == 0
    code, out, _ = run_cli(["analyze", "--input", str(sweep_csv)], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["symptom_detected"] is True
    assert report["min_phi"] == pytest.approx(PI / 2, abs=PI / 16 + 1e-9)


def test_analyze_insufficient_grid_exits_2(tmp_path, capsys):
    sweep_csv = tmp_path / "short.csv"
    code, _, _ = run_cli(
        ["simulate", "--space", "sphere", "--t", "1000", "--seed", "1",
         "--phi-stop", "0.5", "--phi-step", "0.25", "--output", str(sweep_csv)],
        capsys,
    )
    assert code == 0
    code, _, err = run_cli(["analyze", "--input", str(sweep_csv)], capsys)
    assert code == 2
    assert "grid" in err


def test_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "eprsim.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    for sub in ("simulate", "bell", "oracle", "analyze"):
        assert sub in proc.stdout
