"""End-to-end command-line tests, run in process through main(argv).

Short horizons and tiny colonies keep these fast; the point is artifact
layout, exit codes and byte-reproducibility, not tuning quality.
"""

import json

import numpy as np
import pytest

from fopidboost.cli import main

GAINS = {"kp": 2.0, "ti": 2.6e-3, "td": 2.4e-3, "lam": 1.05, "mu": 0.85}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def tiny_tune_config(tmp_path, **scenario_extra):
    doc = {
        "scenario": {"horizon": 0.004, **scenario_extra},
        "abc": {"colony_size": 4, "max_iterations": 2},
    }
    return write_config(tmp_path, doc)


def read_bode(outdir):
    rows = np.loadtxt(outdir / "bode.csv", delimiter=",", skiprows=1)
    return rows[:, 0], rows[:, 1], rows[:, 2]


class TestBode:
    def test_bare_fractional_power(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["bode", "-o", str(out), "--nu", "0.5", "--points", "101"])
        assert rc == 0
        omega, mag, phase = read_bode(out)
        assert omega.size == 101

        mid = np.argmin(np.abs(omega - 316.0))
        assert 40.0 < phase[mid] < 50.0
        m2 = np.interp(np.log10(1e2), np.log10(omega), mag)
        m4 = np.interp(np.log10(1e4), np.log10(omega), mag)
        assert abs((m4 - m2) - 20.0) < 2.0

        prov = json.loads((out / "resolved_config.json").read_text())
        assert prov["nu"] == 0.5
        assert prov["command"] == "bode"

    def test_from_config_gains(self, tmp_path):
        cfg = write_config(tmp_path, {"controller": GAINS})
        out = tmp_path / "out"
        rc = main(["bode", "-c", cfg, "-o", str(out), "--points", "50"])
        assert rc == 0
        omega, mag, _ = read_bode(out)
        assert omega.size == 50
        assert np.all(np.isfinite(mag))
        prov = json.loads((out / "resolved_config.json").read_text())
        assert prov["controller"]["kp"] == 2.0

    def test_needs_gains_or_nu(self, tmp_path):
        assert main(["bode", "-o", str(tmp_path / "o")]) == 2

    def test_rejects_single_point(self, tmp_path):
        rc = main(["bode", "-o", str(tmp_path / "o"), "--nu", "0.5",
                   "--points", "1"])
        assert rc == 2


class TestConfigErrors:
    def test_missing_config_file(self, tmp_path):
        rc = main(["simulate", "-c", str(tmp_path / "nope.json"),
                   "-o", str(tmp_path / "o")])
        assert rc == 2

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{oops")
        assert main(["simulate", "-c", str(path),
                     "-o", str(tmp_path / "o")]) == 2

    def test_unknown_key(self, tmp_path):
        cfg = write_config(tmp_path, {"converter": {"voltage": 5.0}})
        assert main(["simulate", "-c", cfg, "-o", str(tmp_path / "o")]) == 2

    def test_runs_and_workers_must_be_positive(self, tmp_path):
        out = str(tmp_path / "o")
        assert main(["tune", "-o", out, "--runs", "0"]) == 2
        assert main(["tune", "-o", out, "--workers", "0"]) == 2


class TestSimulate:
    def test_artifacts(self, tmp_path):
        cfg = write_config(tmp_path, {"controller": GAINS,
                                      "scenario": {"horizon": 0.004}})
        out = tmp_path / "out"
        rc = main(["simulate", "-c", cfg, "-o", str(out), "--gnuplot"])
        assert rc == 0
        assert (out / "trace.csv").exists()
        assert (out / "v_out.dat").exists()
        assert (out / "v_avg.dat").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["stable"] is True
        assert summary["j_iae_vs"] > 0.0
        prov = json.loads((out / "resolved_config.json").read_text())
        assert prov["config"]["controller"]["kp"] == 2.0

    def test_unstable_run_still_exits_zero(self, tmp_path):
        cfg = write_config(tmp_path, {
            "controller": GAINS,
            "scenario": {"horizon": 0.004, "break_threshold": 5.0}})
        out = tmp_path / "out"
        assert main(["simulate", "-c", cfg, "-o", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["stable"] is False
        assert summary["blowup_time_s"] > 0.0

    def test_needs_gains(self, tmp_path):
        assert main(["simulate", "-o", str(tmp_path / "o")]) == 2


class TestDisturb:
    def test_artifacts_and_metrics(self, tmp_path):
        cfg = write_config(tmp_path, {"controller": GAINS})
        out = tmp_path / "out"
        rc = main(["disturb", "-c", cfg, "-o", str(out), "--gnuplot",
                   "--horizon", "0.02", "--dist-time", "0.012",
                   "--dist-step", "0.1"])
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["disturbance_time_s"] == 0.012
        assert summary["disturbance_relative_step"] == 0.1
        assert summary["max_deviation_V"] >= 0.0
        assert "recovery_time_s" in summary
        assert (out / "v_avg.dat").exists()
        prov = json.loads((out / "resolved_config.json").read_text())
        assert prov["config"]["scenario"]["disturbance"]["time"] == 0.012

    def test_unstable_run_exits_three(self, tmp_path):
        cfg = write_config(tmp_path, {
            "controller": GAINS,
            "scenario": {"break_threshold": 5.0}})
        out = tmp_path / "out"
        rc = main(["disturb", "-c", cfg, "-o", str(out),
                   "--horizon", "0.02", "--dist-time", "0.01"])
        assert rc == 3
        summary = json.loads((out / "summary.json").read_text())
        assert summary["stable"] is False

    def test_disturbance_outside_horizon_is_config_error(self, tmp_path):
        cfg = write_config(tmp_path, {"controller": GAINS})
        rc = main(["disturb", "-c", cfg, "-o", str(tmp_path / "o"),
                   "--horizon", "0.01", "--dist-time", "0.5"])
        assert rc == 2


class TestTune:
    def run_tune(self, cfg, out, *extra):
        return main(["tune", "-c", cfg, "-o", str(out), "--fopid",
                     "--seed", "0", "--runs", "2", *extra])

    def test_artifacts(self, tmp_path, capsys):
        cfg = tiny_tune_config(tmp_path)
        out = tmp_path / "out"
        assert self.run_tune(cfg, out) == 0
        for run in ("run_00", "run_01"):
            for name in ("history.csv", "best_params.json", "trace.csv",
                         "summary.json"):
                assert (out / run / name).exists()
        assert (out / "report.csv").exists()

        best0 = json.loads((out / "run_00" / "best_params.json").read_text())
        assert best0["seed"] == 0
        assert best0["cost"] > 0.0
        assert best0["n_evaluations"] >= 4 * 5
        best1 = json.loads((out / "run_01" / "best_params.json").read_text())
        assert best1["seed"] == 1

        report = json.loads((out / "report.json").read_text())
        assert len(report["rows"]) == 2
        assert report["best_run_id"] in (0, 1)
        assert "best run" in capsys.readouterr().out

    def test_reruns_are_byte_identical_across_workers(self, tmp_path):
        cfg = tiny_tune_config(tmp_path)
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        assert self.run_tune(cfg, a) == 0
        assert self.run_tune(cfg, b) == 0
        assert self.run_tune(cfg, c, "--workers", "3") == 0
        names = ["report.json", "report.csv", "run_00/best_params.json",
                 "run_00/history.csv", "run_00/trace.csv",
                 "run_01/best_params.json"]
        for name in names:
            ref = (a / name).read_bytes()
            assert (b / name).read_bytes() == ref, name
            assert (c / name).read_bytes() == ref, name

    def test_pid_family_pins_integer_orders(self, tmp_path):
        cfg = tiny_tune_config(tmp_path)
        out = tmp_path / "out"
        rc = main(["tune", "-c", cfg, "-o", str(out), "--pid",
                   "--seed", "0", "--runs", "1"])
        assert rc == 0
        best = json.loads((out / "run_00" / "best_params.json").read_text())
        assert best["lam"] == 1.0
        assert best["mu"] == 1.0

    def test_all_candidates_unstable_exits_three(self, tmp_path):
        # a hair-trigger breaker makes every colony candidate trip
        cfg = write_config(tmp_path, {
            "scenario": {"horizon": 0.001, "break_threshold": 0.5},
            "abc": {"colony_size": 4, "max_iterations": 1},
        })
        rc = main(["tune", "-c", cfg, "-o", str(tmp_path / "o"),
                   "--runs", "1"])
        assert rc == 3


def test_compare_protocol(tmp_path, capsys):
    cfg = tiny_tune_config(tmp_path)
    out = tmp_path / "out"
    rc = main(["compare", "-c", cfg, "-o", str(out),
               "--seed", "1", "--runs", "1"])
    assert rc == 0

    doc = json.loads((out / "compare.json").read_text())
    for family in ("pid", "fopid"):
        assert doc[family]["j_iae_vs"] > 0.0
        assert doc[family]["switch_count"] > 0
        assert "max_deviation_V" in doc[family]
        assert (out / family / "report.csv").exists()
        assert (out / f"{family}_disturb" / "v_avg.dat").exists()
        assert (out / f"{family}_disturb" / "summary.json").exists()
    assert doc["pid"]["params"]["lam"] == 1.0
    assert doc["fopid"]["params"]["mu"] != 1.0
    assert np.isfinite(doc["switch_reduction_pct"])
    assert "switch reduction" in capsys.readouterr().out
