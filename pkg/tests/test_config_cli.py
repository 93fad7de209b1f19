import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from phonodot.config import (RunConfig, SystemSection, config_hash,
                             load_config_file, parse_config,
                             serialize_config)
from phonodot.errors import ConfigError
from phonodot.model import TWO_PI

BASE_CONFIG = {
    "schema_version": 1,
    "system": {"delta_ghz": -3.5881, "omega_saw_ghz": 3.5881,
               "g_ghz": 1.0, "gamma_qd_ghz": 0.32, "gamma_z_ghz": 0.06},
    "grid": {"t0_ns": 0.0, "span_ns": 1.0, "dt_ps": 1.0},
    "pulse": {"shape": "square", "start_ns": 0.05, "duration_ns": 0.4,
              "rise_ps": 15.0, "fall_ps": 15.0, "peak_rabi_ghz": 1.0},
    "solver": {"rel_tol": 1e-8, "abs_tol": 1e-10, "max_step_ps": 50.0,
               "output_dt_ps": 1.0},
    "experiment": {"kind": "simulate", "options": {}},
    "output": {"directory": "out", "format": "csv"},
}


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "phonodot.cli", *args],
                          capture_output=True, text=True)


class TestConfig:
    def test_round_trip_identity(self):
        cfg = parse_config(BASE_CONFIG)
        again = parse_config(yaml.safe_load(serialize_config(cfg)))
        assert cfg == again
        assert config_hash(cfg) == config_hash(again)

    def test_units_are_converted(self):
        cfg = parse_config(BASE_CONFIG)
        p = cfg.system.build()
        assert p.delta == pytest.approx(-TWO_PI * 3.5881e9)
        grid = cfg.grid.build()
        assert grid.dt == pytest.approx(1e-12)
        assert grid.t_end == pytest.approx(1e-9)
        env = cfg.pulse.build(grid)
        assert env.peak() == pytest.approx(TWO_PI * 1e9)

    def test_missing_system_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"schema_version": 1})

    def test_unknown_keys_rejected(self):
        bad = dict(BASE_CONFIG)
        bad["systm"] = bad.pop("system")
        with pytest.raises(ConfigError):
            parse_config(bad)
        bad2 = json.loads(json.dumps(BASE_CONFIG))
        bad2["system"]["delta"] = 1.0
        with pytest.raises(ConfigError):
            parse_config(bad2)

    def test_unknown_schema_version(self):
        bad = dict(BASE_CONFIG)
        bad["schema_version"] = 99
        with pytest.raises(ConfigError):
            parse_config(bad)

    def test_defaults_fill_optional_sections(self):
        cfg = parse_config({"system": BASE_CONFIG["system"]})
        assert isinstance(cfg, RunConfig)
        assert cfg.solver.rel_tol == 1e-8

    def test_hash_is_stable_and_sensitive(self):
        cfg = parse_config(BASE_CONFIG)
        other = json.loads(json.dumps(BASE_CONFIG))
        other["system"]["g_ghz"] = 1.1
        assert config_hash(cfg) != config_hash(parse_config(other))


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(BASE_CONFIG))
    return path


class TestCli:
    def test_dry_run_writes_nothing(self, config_file, tmp_path):
        out = tmp_path / "results"
        res = run_cli("simulate", "--config", str(config_file),
                      "--out", str(out), "--dry-run")
        assert res.returncode == 0
        assert "delta_ghz" in res.stdout
        assert not out.exists()

    def test_simulate_writes_trajectory_and_manifest(self, config_file,
                                                     tmp_path):
        out = tmp_path / "results"
        res = run_cli("simulate", "--config", str(config_file),
                      "--out", str(out))
        assert res.returncode == 0
        header = (out / "trajectory.csv").read_text().splitlines()[0]
        assert header == "time_ns,occupancy,sx,sy,sz,trace_error"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["outputs"] == ["trajectory.csv"]
        assert len(manifest["config_hash"]) == 64

    def test_simulate_is_deterministic(self, config_file, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert run_cli("simulate", "--config", str(config_file),
                           "--out", str(out)).returncode == 0
            outs.append((out / "trajectory.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_missing_field_exits_2(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        data = json.loads(json.dumps(BASE_CONFIG))
        del data["system"]["omega_saw_ghz"]
        bad.write_text(yaml.safe_dump(data))
        res = run_cli("simulate", "--config", str(bad), "--out",
                      str(tmp_path / "o"))
        assert res.returncode == 2
        assert "omega_saw" in res.stderr

    def test_unknown_figure_exits_2(self, tmp_path):
        res = run_cli("reproduce", "fig999", "--out", str(tmp_path / "o"))
        assert res.returncode == 2
        assert "fig999" in res.stderr

    def test_bad_data_format_exits_3(self, config_file, tmp_path):
        data = tmp_path / "pts.txt"
        data.write_text("1.0 2.0\n1.0 2.0 3.0\n")
        cfg = json.loads(json.dumps(BASE_CONFIG))
        cfg["experiment"] = {"kind": "simulate",
                             "options": {"kind": "g_vs_power"}}
        cfgf = tmp_path / "cal.yaml"
        cfgf.write_text(yaml.safe_dump(cfg))
        res = run_cli("calibrate", "--config", str(cfgf), "--data",
                      str(data), "--out", str(tmp_path / "o"))
        assert res.returncode == 3

    def test_sweep_single_value_matches_simulate(self, config_file,
                                                 tmp_path):
        out_sim = tmp_path / "sim"
        out_swp = tmp_path / "swp"
        assert run_cli("simulate", "--config", str(config_file), "--out",
                       str(out_sim)).returncode == 0
        res = run_cli("sweep", "--config", str(config_file),
                      "--axis", "system.g_ghz", "--values", "1.0",
                      "--out", str(out_swp), "--workers", "1")
        assert res.returncode == 0
        sim = (out_sim / "trajectory.csv").read_bytes()
        swp = (out_swp / "sweep_g_ghz_1.csv").read_bytes()
        assert sim == swp
        matrix = (out_swp / "sweep_matrix.csv").read_text().splitlines()
        assert matrix[0] == "time_ns,1"

    def test_sweep_bad_axis_exits_2(self, config_file, tmp_path):
        res = run_cli("sweep", "--config", str(config_file),
                      "--axis", "system.nonexistent", "--values", "1.0",
                      "--out", str(tmp_path / "o"))
        assert res.returncode == 2

    def test_calibrate_synthetic_fixture(self, config_file, tmp_path):
        cfg = json.loads(json.dumps(BASE_CONFIG))
        cfg["experiment"] = {"kind": "simulate",
                             "options": {"kind": "g_vs_power",
                                         "true_coefficient": 2.0e9}}
        cfgf = tmp_path / "cal.yaml"
        cfgf.write_text(yaml.safe_dump(cfg))
        out = tmp_path / "o"
        res = run_cli("calibrate", "--config", str(cfgf), "--out", str(out),
                      "--seed", "7")
        assert res.returncode == 0
        fit = json.loads((out / "fit.json").read_text())
        assert fit["model"] == "sqrt_power"
        assert fit["parameters"]["coefficient"] == pytest.approx(2.0e9,
                                                                 rel=0.1)

    def test_reproduce_writes_checks(self, tmp_path):
        out = tmp_path / "fig"
        res = run_cli("reproduce", "fig1c", "--out", str(out))
        assert res.returncode == 0
        assert "[PASS]" in res.stdout
        manifest = json.loads((out / "manifest.json").read_text())
        assert all(c["passed"] for c in manifest["checks"])

    def test_spectrum_filtered_time(self, tmp_path):
        cfg = json.loads(json.dumps(BASE_CONFIG))
        cfg["experiment"] = {"kind": "filtered_time",
                             "options": {"center_ghz": 0.0,
                                         "bandwidth_mhz": 1000.0}}
        cfg["grid"]["span_ns"] = 2.0
        cfgf = tmp_path / "spec.yaml"
        cfgf.write_text(yaml.safe_dump(cfg))
        out = tmp_path / "o"
        res = run_cli("spectrum", "--config", str(cfgf), "--out", str(out))
        assert res.returncode == 0
        lines = (out / "filtered_time.csv").read_text().splitlines()
        assert lines[0] == "time_ns,signal"
        values = np.array([float(x.split(",")[1]) for x in lines[1:]])
        assert values.min() >= 0.0

    def test_optimize_command(self, config_file, tmp_path):
        cfg = json.loads(json.dumps(BASE_CONFIG))
        cfg["grid"]["span_ns"] = 1.5
        cfg["pulse"]["rise_ps"] = 0.0
        cfg["pulse"]["fall_ps"] = 0.0
        cfg["system"]["g_ghz"] = 0.0
        cfg["system"]["gamma_qd_ghz"] = 0.0
        cfg["system"]["gamma_z_ghz"] = 0.0
        cfg["experiment"] = {"kind": "optimize",
                             "options": {"objective": "min_bare_occupancy",
                                         "min_duration_ns": 0.2,
                                         "max_duration_ns": 0.65}}
        cfgf = tmp_path / "opt.yaml"
        cfgf.write_text(yaml.safe_dump(cfg))
        out = tmp_path / "o"
        res = run_cli("optimize", "--config", str(cfgf), "--out", str(out))
        assert res.returncode == 0
        rows = (out / "optima.csv").read_text().splitlines()
        assert rows[0] == "duration_ps,objective"
        assert len(rows) >= 2
