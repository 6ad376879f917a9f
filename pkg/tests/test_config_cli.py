import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from measurement_engine.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main, run
from measurement_engine.config import ConfigError, RunConfig, load_config, parse_config

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = sorted((ROOT / "configs").glob("*.cfg"))


# -- parsing -------------------------------------------------------------------------

def test_shipped_configs_parse():
    assert CONFIGS
    for path in CONFIGS:
        cfg = load_config(path)
        assert cfg.mode in ("sweep", "pdf", "compare")


def test_reference_recipe():
    cfg = load_config(ROOT / "configs" / "trajectory_histograms.cfg")
    assert (cfg.omega0, cfg.z0, cfg.dt_over_tau, cfg.n_steps, cfg.n_traj) == (1.0, (-0.1,), 0.01, 15, 20000)
    assert cfg.duration == pytest.approx(0.15)


def test_simulate_recipe_and_minimal_discrete():
    cfg = parse_config("mode=simulate\nomega0=1.0\nz0=-0.1\ndt_over_tau=0.01\nn_steps=15\nn_traj=20000")
    assert cfg.n_traj == 20000 and cfg.z0 == (-0.1,)
    cfg = parse_config("mode=discrete\nkappa=0.25")
    assert (cfg.omega0, cfg.t_demon, cfg.bins, cfg.master_seed) == (0.1, (0.001,), 100, 42)


def test_comments_grids_and_defaults():
    cfg = parse_config(
        "# header\n"
        "mode = sweep   # trailing\n"
        "\n"
        "kappa_grid=linspace(0.1, 0.9, 5)\n"
        "z0=-0.05, -0.1\n"
    )
    assert cfg.kappa_grid == pytest.approx((0.1, 0.3, 0.5, 0.7, 0.9))
    assert cfg.z0 == (-0.05, -0.1)
    assert cfg.omega0 == 0.1 and cfg.master_seed == 42


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("mode=discrete\nkappa=1.5\n", 2, "κ∈(0,1)"),
        ("mode=discrete\nkappa=0.2\nbogus=1\n", 3, "unknown key"),
        ("mode=discrete\nkappa=0.2\nkappa=0.3\n", 3, "duplicate"),
        ("mode=discrete\nno equals sign\n", 2, "key=value"),
        ("mode=warp\n", 1, "mode must be"),
        ("mode=sweep\n", 1, "exactly one"),
        ("mode=sweep\nkappa_grid=0.2\nQ_grid=1\n", 1, "exactly one"),
        ("mode=discrete\n", 1, "needs kappa"),
        ("mode=simulate\nz0=-0.1,-0.2\n", 2, "only be a list"),
        ("mode=pdf\nz0=0\n", 2, "strictly below"),
        ("mode=simulate\nn_steps=-1\n", 2, "n_steps"),
        ("mode=simulate\nmaster_seed=abc\n", 2, "master_seed"),
        ("mode=simulate\ndt_over_tau=nan\n", 2, "dt_over_tau"),
        ("mode=sweep\nkappa_grid=linspace(0.1, 0.9, 0)\n", 2, "linspace"),
    ],
)
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.lineno == line
    assert fragment in str(err.value)
    assert f"line {line}" in str(err.value)


def test_missing_mode():
    with pytest.raises(ConfigError, match="mode"):
        parse_config("kappa=0.2\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_text_round_trip(path):
    cfg = load_config(path)
    assert parse_config(cfg.to_text()) == cfg


def test_round_trip_keeps_float_bits():
    cfg = RunConfig(mode="discrete", kappa=0.1 + 0.2, omega0=1 / 3)
    assert parse_config(cfg.to_text()) == cfg


# -- command line ---------------------------------------------------------------------

def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_discrete_run(tmp_path):
    cfg = write(tmp_path, "mode=discrete\nkappa=0.25\nz0=-0.1\n")
    assert main([cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    lines = (tmp_path / "o" / "cycle.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header[:4] == ["omega0", "t_demon", "z0", "kappa"]
    row = dict(zip(header, lines[1].split(",")))
    assert float(row["W_ext"]) == pytest.approx(0.210421, abs=1e-6)
    assert row["error"] == ""


def test_three_point_sweep(tmp_path):
    cfg = write(tmp_path, "mode=sweep\nkappa_grid=0.1,0.5,0.9\n")
    assert main([cfg, "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 4
    assert all(len(line.split(",")) == 18 for line in lines)


def test_sweep_over_parameter_lists(tmp_path):
    cfg = write(tmp_path, "mode=sweep\nt_demon=0.001,0.01\nz0=-0.05,-0.1,-0.5\nQ_grid=0,1,2,3\n")
    assert main([cfg, "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 3 * 4


def test_pdf_run(tmp_path):
    cfg = write(tmp_path, "mode=pdf\nz0=-0.1\nn_steps=15\ndt_over_tau=0.01\npoints=200\n")
    assert main([cfg, "--out", str(tmp_path)]) == EXIT_OK
    for name in ("Q", "W", "QM", "dS"):
        data = np.loadtxt(tmp_path / f"density_{name}.csv", delimiter=",", skiprows=1)
        assert data.shape == (200, 3)
        # coarse 200-point grid; the trapezoid total is within a few 1e-3
        assert data[-1, 2] == pytest.approx(1.0, abs=5e-3)


def test_compare_outputs(tmp_path):
    cfg = write(tmp_path, "mode=compare\nomega0=1.0\nz0=-0.1\nn_traj=3000\nbins=40\n")
    assert main([cfg, "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "compare.json").read_text())
    assert {"ks_Q", "ks_W", "ks_QM", "ks_dS", "ks_tolerance", "ks_pass", "mean_Q_M"} <= set(report)
    assert all(report["ks_pass"].values())
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["master_seed"] == 42
    assert parse_config(summary["config"]).n_traj == 3000
    hist = (tmp_path / "histograms.csv").read_text().splitlines()
    assert len(hist) == 1 + 4 * 40


def test_seed_override_changes_results(tmp_path):
    cfg = write(tmp_path, "mode=simulate\nz0=-0.1\nn_traj=200\n")
    assert main([cfg, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([cfg, "--out", str(tmp_path / "b"), "--seed", "7"]) == EXIT_OK
    a = (tmp_path / "a" / "trajectories.csv").read_bytes()
    b = (tmp_path / "b" / "trajectories.csv").read_bytes()
    assert a != b
    assert json.loads((tmp_path / "b" / "summary.json").read_text())["master_seed"] == 7


def test_byte_identical_across_workers(tmp_path):
    text = "mode=simulate\nz0=-0.1\nn_traj=5000\nworkers={}\n"
    main([write(tmp_path, text.format(1), "one.cfg"), "--out", str(tmp_path / "one")])
    main([write(tmp_path, text.format(4), "four.cfg"), "--out", str(tmp_path / "four")])
    for name in ("trajectories.csv", "histograms.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()


def test_config_error_exit_code(tmp_path, capsys):
    assert main([write(tmp_path, "mode=discrete\nkappa=2\n")]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert main([str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    assert main([write(tmp_path, "mode=discrete\nkappa=0.2\n"), "--seed", "-3"]) == EXIT_CONFIG


def test_runtime_error_exit_code(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    cfg = write(tmp_path, "mode=discrete\nkappa=0.2\n")
    assert main([cfg, "--out", str(blocker / "sub")]) == EXIT_RUNTIME
    assert "error" in capsys.readouterr().err


def test_entry_point_subprocess(tmp_path):
    cfg = write(tmp_path, "mode=discrete\nkappa=0.3\n")
    done = subprocess.run(
        [sys.executable, "-m", "measurement_engine.cli", cfg, "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert done.returncode == 0, done.stderr
    assert (tmp_path / "cycle.csv").exists()


def test_run_uses_config_output(tmp_path):
    cfg = parse_config(f"mode=discrete\nkappa=0.4\noutput={tmp_path / 'x'}\n")
    (path,) = run(cfg)
    assert path == tmp_path / "x" / "cycle.csv"
    assert not math.isnan(float(path.read_text().splitlines()[1].split(",")[3]))
