"""Package acceptance suite.

One test per acceptance criterion, each printing a PASS/FAIL line into the
terminal summary.  Criteria with runtime budgets are timed after a warmup
run so compilation cost does not count against them.  The tuning-regime
criteria share one module-scoped set of eight seeded colony runs.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from fopidboost.beecolony import (
    FOPID_BOUNDS,
    PENALTY_COST,
    PID_BOUNDS,
    AbcConfig,
    TuningSetup,
    make_objective,
    optimize,
    tune_fopid,
    tune_pid,
)
from fopidboost.cli import main
from fopidboost.controller import FopidParams, build_fopid, build_pid
from fopidboost.converter import ConverterParams, PwmModulator
from fopidboost.oustaloup import OraConfig, approximate_power, freq_response, freq_response_grid
from fopidboost.reporting import build_report, disturbance_metrics
from fopidboost.simloop import (
    Disturbance,
    Scenario,
    plant_timestep,
    simulate,
    simulate_fixed_duty,
)

PLANT = ConverterParams()
MOD = PwmModulator(f_sw=10e3)
ORA = OraConfig(order_nu=0.5, omega_l=1e-1, omega_h=1e6, n_sections=8)
DT = plant_timestep(10e3)


@contextmanager
def criterion(number, label, record):
    try:
        yield
    except BaseException:
        record(f"ACCEPTANCE {number} ({label}): FAIL")
        raise
    record(f"ACCEPTANCE {number} ({label}): PASS")


@pytest.fixture(scope="module")
def warmed():
    """One tiny closed-loop run so kernel compilation precedes any timing."""
    params = FopidParams(kp=1.0, ti=1e-2, td=1e-3)
    simulate(build_fopid(params, ORA, DT), PLANT, MOD, Scenario(horizon=1e-4))
    simulate_fixed_duty(0.5, PLANT, MOD, Scenario(horizon=1e-4))


@pytest.fixture(scope="module")
def regime_runs(warmed):
    """Four seeded tuning runs per family under the default regime."""
    setup = TuningSetup(scenario=Scenario(v_ref=12.0, horizon=0.05))
    out = {}
    for family, bounds, fn in (("pid", PID_BOUNDS, tune_pid),
                               ("fopid", FOPID_BOUNDS, tune_fopid)):
        runs = []
        for seed in range(14, 18):
            abc = AbcConfig(bounds=bounds, colony_size=10, max_iterations=20,
                            rng_seed=seed)
            t0 = time.perf_counter()
            res = fn(setup, abc=abc)
            runs.append((res, time.perf_counter() - t0))
        out[family] = runs
    return out


def family_best(runs):
    report = build_report([(r.best_params, r.best_sim) for r, _ in runs])
    return runs[report.best_run_id][0]


def test_criterion_1_fractional_operator_fidelity(summary_line, warmed):
    with criterion(1, "fractional operator fidelity", summary_line):
        t0 = time.perf_counter()
        band = (1e-2, 1e6)
        omega = np.logspace(0.0, 4.0, 81)   # middle four decades
        for nu in (0.25, 0.5, 0.75):
            approx = approximate_power(nu, band, 8)
            assert abs(abs(freq_response(approx, 1.0)) - 1.0) <= 1e-12

            h = np.asarray(freq_response_grid(approx, omega))
            mag_db = 20.0 * np.log10(np.abs(h))
            slope = np.polyfit(np.log10(omega), mag_db, 1)[0]
            assert abs(slope - 20.0 * nu) <= 1.0

            phase = np.degrees(np.angle(h))
            assert np.max(np.abs(phase - 90.0 * nu)) <= 5.0
        assert time.perf_counter() - t0 < 1.0


def test_criterion_2_open_loop_dc_level(summary_line, warmed):
    with criterion(2, "open-loop dc level", summary_line):
        t0 = time.perf_counter()
        d = 0.6
        res = simulate_fixed_duty(d, PLANT, MOD, Scenario(horizon=0.1))
        vbar = float(np.mean(res.v_avg[res.time > 0.09]))
        target = PLANT.v_g / ((1.0 - d) + PLANT.r_l / (PLANT.r_load * (1.0 - d)))
        assert abs(vbar - target) / target < 0.02

        ideal = ConverterParams(r_l=0.0, r_c=0.0)
        res = simulate_fixed_duty(d, ideal, MOD, Scenario(horizon=0.1))
        vbar = float(np.mean(res.v_avg[res.time > 0.09]))
        target = PLANT.v_g / (1.0 - d)
        assert abs(vbar - target) / target < 0.01
        assert time.perf_counter() - t0 < 5.0


def test_criterion_3_duty_step_undershoot(summary_line, warmed):
    with criterion(3, "duty step undershoot before rise", summary_line):
        t0 = time.perf_counter()
        d = 0.55
        res = simulate_fixed_duty(d, PLANT, MOD, Scenario(horizon=0.15),
                                  duty_after=1.05 * d, step_time=0.08)
        t, v = res.time, res.v_avg
        pre = float(np.mean(v[(t >= 0.075) & (t < 0.08)]))
        after = t >= 0.08
        dv = v[after] - pre
        ta = t[after]

        dip_idx = int(np.argmin(dv))
        assert dv[dip_idx] < -5e-4          # transient moves the wrong way
        assert dv[-1] > 0.3                 # then settles higher
        rise_idx = int(np.flatnonzero(dv > 0.3)[0])
        assert ta[dip_idx] < ta[rise_idx]   # dip strictly precedes the rise
        assert time.perf_counter() - t0 < 5.0


def test_criterion_4_integer_order_equivalence(summary_line, warmed):
    with criterion(4, "integer-order reduction is bitwise", summary_line):
        params = FopidParams(kp=2.0, ti=2.6e-3, td=2.4e-3, lam=1.0, mu=1.0)
        scenario = Scenario(v_ref=12.0, horizon=0.01)
        a = simulate(build_fopid(params, ORA, DT), PLANT, MOD, scenario)
        b = simulate(build_pid(params, ORA, DT), PLANT, MOD, scenario)
        for name in ("v_out", "i_l", "v_c", "duty", "switch_state", "v_avg"):
            assert np.array_equal(getattr(a, name), getattr(b, name)), name
        assert a.j_iae == b.j_iae
        assert a.switch_count == b.switch_count


def test_criterion_5_colony_benchmark(summary_line):
    with criterion(5, "colony reaches the sphere minimum", summary_line):
        t0 = time.perf_counter()
        bounds = ((-5.0, 5.0),) * 5

        cfg = AbcConfig(bounds=bounds, colony_size=10, max_iterations=24,
                        rng_seed=356)
        res = optimize(lambda x: float(np.dot(x, x)), cfg)
        assert res.n_evaluations <= 500
        assert res.best.cost < 1e-3
        assert np.all(np.diff(res.history_best) <= 0.0)

        for seed in range(5):
            other = optimize(lambda x: float(np.dot(x, x)),
                             AbcConfig(bounds=bounds, colony_size=10,
                                       max_iterations=24, rng_seed=seed))
            assert np.all(np.diff(other.history_best) <= 0.0)
        assert time.perf_counter() - t0 < 1.0


def test_criterion_6_default_regime_tuning(summary_line, regime_runs):
    with criterion(6, "tuned regime and family ordering", summary_line):
        for family in ("pid", "fopid"):
            for _, elapsed in regime_runs[family]:
                assert elapsed <= 120.0

        best_pid = family_best(regime_runs["pid"])
        best_fopid = family_best(regime_runs["fopid"])
        for res in (best_pid, best_fopid):
            sim = res.best_sim
            assert sim.stable
            assert sim.overshoot_pct < 5.0
            assert sim.settling_time is not None and sim.settling_time < 0.02

        assert best_fopid.best_cost <= best_pid.best_cost
        assert best_fopid.best_sim.switch_count <= best_pid.best_sim.switch_count


def test_criterion_7_disturbance_rejection_ordering(summary_line, regime_runs):
    with criterion(7, "input-step rejection ordering", summary_line):
        scenario = Scenario(v_ref=12.0, horizon=0.3,
                            disturbance=Disturbance(time=0.15,
                                                    relative_step=0.10))
        metrics = {}
        for family in ("pid", "fopid"):
            params = family_best(regime_runs[family]).best_params
            res = simulate(build_fopid(params, ORA, DT), PLANT, MOD, scenario)
            assert res.stable
            dev, rec = disturbance_metrics(res.time, res.v_avg, 12.0, 0.15)
            metrics[family] = (dev, math.inf if rec is None else rec)

        assert metrics["fopid"][0] <= metrics["pid"][0]
        assert metrics["fopid"][1] <= metrics["pid"][1]


def test_criterion_8_breaker_and_penalty(summary_line, warmed):
    with criterion(8, "breaker aborts and penalizes runaways", summary_line):
        # a bare high gain rails the duty and slams the inductor current
        runaway = FopidParams(kp=1000.0, ti=1e9, td=0.0)
        res = simulate(build_fopid(runaway, ORA, DT), PLANT, MOD,
                       Scenario(v_ref=12.0, horizon=0.05),
                       break_threshold=30.0)
        assert res.stable is False
        assert res.blowup_time is not None and res.blowup_time < 0.05

        setup = TuningSetup(scenario=Scenario(v_ref=12.0, horizon=0.05),
                            break_threshold=30.0)
        objective = make_objective(setup)
        assert objective([1000.0, 1e-4, 1e-2, 1.0, 1.0]) == PENALTY_COST

        counts = {"penalties": 0}

        def counting(position):
            cost = objective(position)
            if cost == PENALTY_COST:
                counts["penalties"] += 1
            return cost

        wide = ((0.1, 1000.0),) + FOPID_BOUNDS[1:]
        result = optimize(counting, AbcConfig(bounds=wide, colony_size=6,
                                              max_iterations=6, rng_seed=0))
        assert counts["penalties"] >= 1
        assert result.best.cost < PENALTY_COST


def test_criterion_9_artifact_determinism(summary_line, warmed, tmp_path):
    with criterion(9, "artifacts are byte-identical on rerun", summary_line):
        import json

        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps({
            "scenario": {"horizon": 0.004},
            "abc": {"colony_size": 4, "max_iterations": 2},
            "controller": {"kp": 2.0, "ti": 2.6e-3, "td": 2.4e-3,
                           "lam": 1.05, "mu": 0.85},
        }))
        cfg = str(cfg_path)

        def tree(root):
            return {p.relative_to(root): p.read_bytes()
                    for p in sorted(root.rglob("*")) if p.is_file()}

        def run_twice(label, argv_fn, third=None):
            a, b = tmp_path / f"{label}_a", tmp_path / f"{label}_b"
            assert main(argv_fn(a)) == 0
            assert main(argv_fn(b)) == 0
            ta, tb = tree(a), tree(b)
            assert ta.keys() == tb.keys() and ta
            for name in ta:
                assert ta[name] == tb[name], f"{label}/{name}"
            if third is not None:
                c = tmp_path / f"{label}_c"
                assert main(third(c)) == 0
                tc = tree(c)
                assert tc.keys() == ta.keys()
                for name in ta:
                    assert tc[name] == ta[name], f"{label}/{name} (workers)"

        run_twice("tune",
                  lambda o: ["tune", "-c", cfg, "-o", str(o), "--fopid",
                             "--seed", "0", "--runs", "2"],
                  third=lambda o: ["tune", "-c", cfg, "-o", str(o), "--fopid",
                                   "--seed", "0", "--runs", "2",
                                   "--workers", "3"])
        run_twice("simulate",
                  lambda o: ["simulate", "-c", cfg, "-o", str(o), "--gnuplot"])
        run_twice("bode",
                  lambda o: ["bode", "-c", cfg, "-o", str(o), "--nu", "0.5",
                             "--points", "64"])
