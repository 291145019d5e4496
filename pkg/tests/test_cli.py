import csv
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from polaritron import presets
from polaritron.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_UNSTABLE,
    SCHEMA,
    ConfigError,
    load_config,
    main,
    parse_config_text,
    validate,
)
from polaritron.constants import khz

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
FAST_GRID = ["--grid-start", "-400", "--grid-stop", "400", "--grid-step", "0.05"]


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    meta = [line[2:] for line in lines if line.startswith("# ")]
    rows = list(csv.reader(line for line in lines if not line.startswith("#")))
    return meta, rows[0], np.array(rows[1:], dtype=float)


def meta_value(meta, key):
    return next(line.split(": ", 1)[1] for line in meta if line.startswith(key + ": "))


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_defaults_and_single_override():
    cfg = parse_config_text("[model]\ndelta_khz = -150\n")
    p = cfg.to_params()
    assert p.delta == pytest.approx(khz(-150.0))
    assert p.kappa == pytest.approx(khz(57.0))
    assert p.omega_x0 == pytest.approx(khz(132.0))
    assert p.omega_y0 == pytest.approx(khz(117.0))
    assert all(cfg[k] == d for k, (_, d) in SCHEMA.items() if k != "model.delta_khz")


@pytest.mark.parametrize("text, field", [
    ("[model]\nkappa_khz = -1\n", "model.kappa_khz"),
    ("[model]\neta = 2\n", "model.eta"),
    ("[model]\nkappa = 57\n", "model.kappa"),
    ("[bogus]\nx = 1\n", "bogus.x"),
    ("[model]\ndelta_khz = abc\n", "model.delta_khz"),
    ("[sweep]\nstart = -260\nstop = -60\nstep = 7\n", "sweep.step"),
    ("[grid]\nstart_khz = 0\nstop_khz = 1\nstep_khz = 0.3\n", "grid.step_khz"),
    ("[sweep]\nparameter = model.nothing\n", "sweep.parameter"),
    ("[model]\ngamma_m_hz = 1\n[environment]\npressure_pa = 1e-3\n", "model.gamma_m_hz"),
    ("[model]\ng_x_khz = 1\n[environment]\ng_total_khz = 30\ntheta_pol_deg = 72\n",
     "model.g_x_khz"),
    ("[environment]\ng_total_khz = 30\n", "environment.g_total_khz"),
])
def test_invalid_configs_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config_text(text)


def test_parse_error_is_a_config_error():
    with pytest.raises(ConfigError, match="parse"):
        parse_config_text("delta_khz = 3\n")


def test_shipped_configs_load():
    full = load_config(CONFIGS / "moderate_vacuum.ini")
    assert full.sweep_values() == [-260.0, -210.0, -160.0, -140.0, -120.0, -100.0, -80.0, -60.0]
    assert full.environment().pressure == 6e-3
    p = full.to_params()
    ref = presets.moderate_vacuum()
    for name in ("gamma_mx", "g_x", "g_y", "n_th_x", "gamma_nx", "gamma_ny", "eta"):
        assert getattr(p, name) == pytest.approx(getattr(ref, name), rel=1e-6)
    high = load_config(CONFIGS / "high_vacuum.ini").to_params()
    ref = presets.high_vacuum()
    for name in ("omega_x0", "omega_y0", "g_x", "g_y", "gamma_mx"):
        assert getattr(high, name) == pytest.approx(getattr(ref, name), rel=1e-6)
    assert len(load_config(CONFIGS / "two_crossing.ini").sweep_values()) == 201


@pytest.mark.parametrize("name", ["moderate_vacuum.ini", "two_crossing.ini", "high_vacuum.ini"])
def test_resolved_config_round_trips(name):
    cfg = load_config(CONFIGS / name)
    again = parse_config_text(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()


def test_round_trip_keeps_awkward_floats():
    cfg = validate({"model.delta_khz": -0.1 - 0.2, "sweep.values": [1e-17, 3.3333333333333335]})
    assert parse_config_text(cfg.dumps()) == cfg


def test_sweep_over_another_parameter():
    cfg = parse_config_text("[sweep]\nparameter = model.g_x_khz\nvalues = 5, 10\n")
    pts = cfg.sweep_params()
    assert [x for x, _ in pts] == [5.0, 10.0]
    assert pts[1][1].g_x == pytest.approx(khz(10.0))


def test_dispersion_reports_two_crossings(tmp_path):
    code = main(["dispersion", "--config", str(CONFIGS / "two_crossing.ini"),
                 "--out", str(tmp_path), "--jobs", "1"])
    assert code == EXIT_OK
    meta, header, data = read_csv(tmp_path / "dispersion.csv")
    assert header[:4] == ["detuning_khz", "f1_khz", "f2_khz", "f3_khz"]
    assert "photfrac3" in header
    assert meta_value(meta, "avoided_crossings") == "2"
    assert data.shape == (201, 11)
    assert any("units" in line for line in meta)


def test_uncoupled_spectrum_is_shot_noise(tmp_path):
    cfg = write(tmp_path, "[model]\ng_x_khz = 0\ng_y_khz = 0\n")
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path), *FAST_GRID]) == EXIT_OK
    _, header, data = read_csv(tmp_path / "spectrum.csv")
    assert header[:2] == ["freq_khz", "s_out"]
    np.testing.assert_allclose(data[:, 1], 1.0, atol=1e-6)


def test_occupation_at_minus_120(tmp_path):
    cfg = write(tmp_path, (CONFIGS / "moderate_vacuum.ini").read_text()
                + "\n[grid]\nstep_khz = 0.05\n")
    assert main(["occupation", "--config", cfg, "--out", str(tmp_path), "--jobs", "2"]) == EXIT_OK
    _, header, data = read_csv(tmp_path / "occupation.csv")
    assert header == ["delta_khz", "n_x", "n_y", "theta_min_deg", "n_min"]
    row = data[data[:, 0] == -120.0][0]
    assert 10.0 <= row[3] <= 20.0
    assert row[4] < min(row[1], row[2])
    meta, _, theta = read_csv(tmp_path / "occupation_theta.csv")
    assert float(meta_value(meta, "theta_min_deg")) == pytest.approx(row[3], abs=1e-6)
    assert theta[:, 1].min() >= float(meta_value(meta, "n_min")) * (1 - 1e-9)


def test_fit_budget_and_asymmetry_outputs(tmp_path):
    cfg = write(tmp_path, (CONFIGS / "high_vacuum.ini").read_text())
    for sub in ("fit", "budget", "asymmetry"):
        assert main([sub, "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    _, header, fit = read_csv(tmp_path / "fit.csv")
    assert header[:3] == ["peak", "center_khz", "half_width_khz"]
    assert fit.shape[0] == 3
    budget = (tmp_path / "budget.txt").read_text()
    assert "[X] thermal_khz=" in budget and "two_mode_strong=" in budget
    meta, _, _ = read_csv(tmp_path / "asymmetry.csv")
    assert float(meta_value(meta, "ratio")) > 0


def test_fit_reads_a_spectrum_file(tmp_path):
    freq = np.arange(100.0, 140.0, 0.01)
    values = 1 + 5 * 0.5 / ((freq - 120.0) ** 2 + 0.25)
    data = "\n".join(f"{f:.4f},{v:.12g}" for f, v in zip(freq, values))
    spec = tmp_path / "in.csv"
    spec.write_text("# synthetic\nfreq_khz,s\n" + data + "\n")
    cfg = write(tmp_path, f"[fit]\ninput = {spec}\nn_peaks = 1\n")
    assert main(["fit", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    _, _, fit = read_csv(tmp_path / "fit.csv")
    assert fit[0, 1] == pytest.approx(120.0, abs=1e-6)
    assert fit[0, 2] == pytest.approx(0.5, rel=1e-6)


def test_reruns_are_byte_identical(tmp_path):
    cfg = write(tmp_path, "[model]\ndelta_khz = -150\n")
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["spectrum", "--config", cfg, "--out", str(out), *FAST_GRID]) == EXIT_OK
        assert main(["dispersion", "--config", cfg, "--out", str(out)]) == EXIT_OK
    for name in ("spectrum.csv", "dispersion.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


ORACLE_CFG = ("[model]\ndelta_khz = -200\ng_x_khz = 5\ng_y_khz = 3\n"
              "[oracle]\nduration_s = 0.05\nresolution_hz = 1000\n")


def test_oracle_seed_from_environment(tmp_path, monkeypatch):
    cfg = write(tmp_path, ORACLE_CFG)
    outs = {}
    for name, seed in (("a", "5"), ("b", "5"), ("c", "6")):
        monkeypatch.setenv("POLARITRON_SEED", seed)
        assert main(["oracle", "--config", cfg, "--out", str(tmp_path / name)]) == EXIT_OK
        outs[name] = (tmp_path / name / "oracle.csv").read_bytes()
    assert outs["a"] == outs["b"] != outs["c"]
    meta, header, _ = read_csv(tmp_path / "a" / "oracle.csv")
    assert meta_value(meta, "seed") == "5"
    assert header == ["freq_khz", "psd_sde", "s_bb_classical"]
    monkeypatch.setenv("POLARITRON_SEED", "x")
    assert main(["oracle", "--config", cfg, "--out", str(tmp_path / "d")]) == EXIT_CONFIG


def test_exit_codes(tmp_path):
    assert main(["spectrum", "--config", write(tmp_path, "[model]\nkappa_khz = -1\n"),
                 "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["nonsense"]) == EXIT_CONFIG
    assert main(["spectrum", "--config", str(tmp_path / "missing.ini")]) == EXIT_IO
    blocked = tmp_path / "file"
    blocked.write_text("")
    assert main(["budget", "--out", str(blocked / "sub")]) == EXIT_IO
    blue = write(tmp_path, "[model]\ndelta_khz = 130\ng_x_khz = 25\n", "blue.ini")
    assert main(["budget", "--config", blue, "--out", str(tmp_path)]) == EXIT_UNSTABLE
    narrow = write(tmp_path, "[grid]\nstart_khz = -50\nstop_khz = 50\n", "narrow.ini")
    assert main(["spectrum", "--config", narrow, "--out", str(tmp_path)]) == EXIT_NUMERICAL
    assert main(["budget", "--jobs", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unstable_message_names_eigenvalue(tmp_path, capsys):
    blue = write(tmp_path, "[model]\ndelta_khz = 130\ng_x_khz = 25\n")
    main(["occupation", "--config", blue, "--out", str(tmp_path)])
    assert "eigenvalue" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "polaritron.cli", "budget", "--out", str(tmp_path)],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0, res.stderr
    assert res.stdout.strip().endswith("budget.txt")
    assert math.isfinite(float((tmp_path / "budget.txt").read_text().split("thermal_khz=")[1]
                               .split()[0]))
