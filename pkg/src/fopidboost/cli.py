"""Command-line front end.

Five subcommands wire the library together: `tune` runs seeded colony
searches and writes per-run artifacts plus a comparison table, `simulate`
and `disturb` run one closed-loop scenario from fixed gains, `bode` dumps
a frequency-response table, and `compare` performs the full PID-vs-FOPID
protocol including the input-step rejection test.

Every command is reproducible from (config, seed): artifacts embed the
resolved configuration, floats are written in round-trip form, and JSON
keys are sorted.  Exit codes: 0 on success, 2 for configuration problems,
3 when a run is too unstable to produce the requested report.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .beecolony import (OptimizerError, TuningResult, tune_fopid, tune_pid,
                        write_history_csv)
from .config import (ConfigError, RunConfig, default_config, load_config,
                     resolved_dict)
from .controller import ControllerError, build_fopid, built_response
from .oustaloup import ApproximationError, approximate_power, freq_response_grid
from .reporting import (ComparisonReport, ReportError, build_report,
                        disturbance_metrics, switch_reduction_pct,
                        write_gnuplot_columns, write_report_csv,
                        write_report_json)
from .simloop import (Disturbance, SimConfigError, SimResult, export_trace_csv,
                      plant_timestep, simulate, write_summary_json)

DISTURB_HORIZON = 0.3
DISTURB_TIME = 0.15
DISTURB_STEP = 0.10


class UnstableRunError(RuntimeError):
    """A command could not finish because the closed loop blew up."""


def _write_json(path, doc: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load(args) -> RunConfig:
    if args.config is None:
        return default_config()
    return load_config(args.config)


def _outdir(args) -> Path:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _provenance(out: Path, cfg: RunConfig, **extra) -> None:
    doc = {"config": resolved_dict(cfg)}
    doc.update(extra)
    _write_json(out / "resolved_config.json", doc)


def _fixed_gains(cfg: RunConfig):
    if cfg.controller is None:
        raise ConfigError(
            "this command needs controller gains; add kp/ti/td to the "
            "controller section of the config")
    return cfg.controller


def _simulate_fixed(cfg: RunConfig, scenario=None) -> SimResult:
    params = _fixed_gains(cfg)
    dt = plant_timestep(cfg.modulator.f_sw)
    ctrl = build_fopid(params, cfg.ora, dt, u_min=cfg.u_min, u_max=cfg.u_max)
    return simulate(ctrl, cfg.converter, cfg.modulator,
                    scenario if scenario is not None else cfg.scenario,
                    break_threshold=cfg.break_threshold)


def _params_doc(params) -> dict:
    return {"kp": params.kp, "ti": params.ti, "td": params.td,
            "lam": params.lam, "mu": params.mu}


def _tune_family(cfg: RunConfig, out: Path, pid: bool, seed: int,
                 runs: int, workers: int):
    """Run `runs` seeded searches, write per-run artifacts, return results."""
    setup = cfg.tuning_setup()
    fn = tune_pid if pid else tune_fopid
    results: list[TuningResult] = []
    for i in range(runs):
        run_seed = seed + i
        abc = cfg.abc_config(pid=pid, rng_seed=run_seed)
        res = fn(setup, abc=abc, workers=workers)
        rundir = out / f"run_{i:02d}"
        rundir.mkdir(parents=True, exist_ok=True)
        write_history_csv(res, rundir / "history.csv")
        doc = _params_doc(res.best_params)
        doc.update({"cost": res.best_cost, "n_evaluations": res.n_evaluations,
                    "seed": run_seed})
        _write_json(rundir / "best_params.json", doc)
        export_trace_csv(res.best_sim, rundir / "trace.csv")
        write_summary_json(res.best_sim, rundir / "summary.json",
                           extra={"seed": run_seed})
        results.append(res)
        print(f"run {i:02d} seed={run_seed} cost={res.best_cost!r} "
              f"stable={int(res.best_sim.stable)}")
    report = build_report([(r.best_params, r.best_sim) for r in results])
    write_report_csv(report, out / "report.csv")
    write_report_json(report, out / "report.json")
    return results, report


def cmd_tune(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    family = "pid" if args.pid else "fopid"
    try:
        results, report = _tune_family(cfg, out, args.pid, args.seed,
                                       args.runs, args.workers)
    except ReportError as exc:
        raise UnstableRunError(str(exc)) from exc
    _provenance(out, cfg, command="tune", family=family,
                seed=args.seed, runs=args.runs)
    best = report.best
    print(f"best run {best.run_id:02d}: J={best.j_iae!r} "
          f"switches={best.switch_count}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    res = _simulate_fixed(cfg)
    export_trace_csv(res, out / "trace.csv")
    write_summary_json(res, out / "summary.json")
    if args.gnuplot:
        write_gnuplot_columns(out / "v_out.dat", res.time, res.v_out,
                              labels=("time_s", "v_out_V"))
        write_gnuplot_columns(out / "v_avg.dat", res.time, res.v_avg,
                              labels=("time_s", "v_avg_V"))
    _provenance(out, cfg, command="simulate")
    print(f"stable={int(res.stable)} J={res.j_iae!r}" if res.stable
          else f"stable=0 blowup_time={res.blowup_time!r}")
    return 0


def cmd_disturb(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    try:
        scenario = replace(cfg.scenario, horizon=args.horizon,
                           disturbance=Disturbance(args.dist_time,
                                                   args.dist_step))
    except SimConfigError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = replace(cfg, scenario=scenario)
    res = _simulate_fixed(cfg)
    export_trace_csv(res, out / "trace.csv")
    if not res.stable:
        write_summary_json(res, out / "summary.json")
        _provenance(out, cfg, command="disturb")
        raise UnstableRunError(
            f"loop blew up at t={res.blowup_time!r} s, no disturbance "
            f"metrics possible")
    max_dev, recovery = disturbance_metrics(res.time, res.v_avg, res.v_ref,
                                            args.dist_time)
    write_summary_json(res, out / "summary.json", extra={
        "disturbance_time_s": args.dist_time,
        "disturbance_relative_step": args.dist_step,
        "max_deviation_V": max_dev,
        "recovery_time_s": recovery,
    })
    if args.gnuplot:
        write_gnuplot_columns(out / "v_avg.dat", res.time, res.v_avg,
                              labels=("time_s", "v_avg_V"))
    _provenance(out, cfg, command="disturb")
    print(f"max_deviation_V={max_dev!r} recovery_time_s={recovery!r}")
    return 0


def cmd_bode(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    if args.points < 2:
        raise ConfigError(f"--points must be at least 2, got {args.points}")
    band = (cfg.ora.omega_l, cfg.ora.omega_h)
    omega = np.logspace(np.log10(band[0]), np.log10(band[1]), args.points)
    if args.nu is not None:
        approx = approximate_power(args.nu, band, cfg.ora.n_sections)
        h = np.asarray(freq_response_grid(approx, omega))
        subject = {"nu": args.nu}
    else:
        params = _fixed_gains(cfg)
        dt = plant_timestep(cfg.modulator.f_sw)
        ctrl = build_fopid(params, cfg.ora, dt,
                           u_min=cfg.u_min, u_max=cfg.u_max)
        h = np.asarray([built_response(ctrl, w) for w in omega])
        subject = {"controller": _params_doc(params)}
    mag_db = 20.0 * np.log10(np.abs(h))
    phase_deg = np.degrees(np.angle(h))
    with open(out / "bode.csv", "w", newline="\n") as fh:
        fh.write("omega_rad_s,magnitude_db,phase_deg\n")
        for w, m, p in zip(omega, mag_db, phase_deg):
            fh.write(f"{float(w)!r},{float(m)!r},{float(p)!r}\n")
    _provenance(out, cfg, command="bode", points=args.points, **subject)
    print(f"wrote {args.points} points over [{band[0]!r}, {band[1]!r}] rad/s")
    return 0


def _disturb_best(cfg: RunConfig, out: Path, params) -> dict:
    scenario = replace(cfg.scenario, horizon=DISTURB_HORIZON,
                       disturbance=Disturbance(DISTURB_TIME, DISTURB_STEP))
    run_cfg = replace(cfg, scenario=scenario, controller=params)
    res = _simulate_fixed(run_cfg)
    out.mkdir(parents=True, exist_ok=True)
    export_trace_csv(res, out / "trace.csv")
    if not res.stable:
        write_summary_json(res, out / "summary.json")
        raise UnstableRunError(
            f"best controller blew up during the disturbance run at "
            f"t={res.blowup_time!r} s")
    max_dev, recovery = disturbance_metrics(res.time, res.v_avg, res.v_ref,
                                            DISTURB_TIME)
    write_summary_json(res, out / "summary.json", extra={
        "disturbance_time_s": DISTURB_TIME,
        "disturbance_relative_step": DISTURB_STEP,
        "max_deviation_V": max_dev,
        "recovery_time_s": recovery,
    })
    write_gnuplot_columns(out / "v_avg.dat", res.time, res.v_avg,
                          labels=("time_s", "v_avg_V"))
    return {"max_deviation_V": max_dev, "recovery_time_s": recovery}


def cmd_compare(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    doc: dict = {}
    bests = {}
    try:
        for family, pid in (("pid", True), ("fopid", False)):
            print(f"tuning {family}:")
            results, report = _tune_family(cfg, out / family, pid,
                                           args.seed, args.runs, args.workers)
            best = report.best
            bests[family] = results[best.run_id]
            doc[family] = {
                "params": _params_doc(bests[family].best_params),
                "best_run_id": best.run_id,
                "j_iae_vs": best.j_iae,
                "overshoot_pct": best.overshoot_pct,
                "settling_time_s": best.settling_time,
                "switch_count": best.switch_count,
            }
            doc[family].update(_disturb_best(
                cfg, out / f"{family}_disturb", bests[family].best_params))
    except ReportError as exc:
        raise UnstableRunError(str(exc)) from exc
    doc["switch_reduction_pct"] = switch_reduction_pct(
        doc["pid"]["switch_count"], doc["fopid"]["switch_count"])
    _write_json(out / "compare.json", doc)
    _provenance(out, cfg, command="compare", seed=args.seed, runs=args.runs)
    print(f"J: fopid={doc['fopid']['j_iae_vs']!r} "
          f"pid={doc['pid']['j_iae_vs']!r}")
    print(f"switch reduction: {doc['switch_reduction_pct']!r} %")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fopidboost",
        description="Fractional-order PID workbench for a boost converter")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-c", "--config", metavar="PATH",
                        help="JSON config; defaults used when omitted")
        sp.add_argument("-o", "--outdir", metavar="DIR", required=True,
                        help="directory artifacts are written into")

    tune = sub.add_parser("tune", help="seeded colony search for gains")
    common(tune)
    family = tune.add_mutually_exclusive_group()
    family.add_argument("--pid", action="store_true",
                        help="tune the integer-order controller")
    family.add_argument("--fopid", action="store_true",
                        help="tune the fractional controller (default)")
    tune.add_argument("--seed", type=int, default=0)
    tune.add_argument("--runs", type=int, default=1,
                      help="independent seeded runs (seed, seed+1, ...)")
    tune.add_argument("--workers", type=int, default=1,
                      help="threads for candidate evaluation")
    tune.set_defaults(func=cmd_tune)

    sim = sub.add_parser("simulate",
                         help="closed-loop run from fixed config gains")
    common(sim)
    sim.add_argument("--gnuplot", action="store_true",
                     help="also write two-column .dat trace files")
    sim.set_defaults(func=cmd_simulate)

    dist = sub.add_parser("disturb",
                          help="input-voltage step rejection run")
    common(dist)
    dist.add_argument("--horizon", type=float, default=DISTURB_HORIZON)
    dist.add_argument("--dist-time", type=float, default=DISTURB_TIME,
                      help="disturbance instant in seconds")
    dist.add_argument("--dist-step", type=float, default=DISTURB_STEP,
                      help="relative input-voltage step, 0.10 = +10%%")
    dist.add_argument("--gnuplot", action="store_true")
    dist.set_defaults(func=cmd_disturb)

    bode = sub.add_parser("bode", help="frequency-response table")
    common(bode)
    bode.add_argument("--nu", type=float, default=None,
                      help="bare fractional power instead of config gains")
    bode.add_argument("--points", type=int, default=200)
    bode.set_defaults(func=cmd_bode)

    comp = sub.add_parser("compare",
                          help="full PID-vs-FOPID tuning and disturbance "
                               "protocol")
    common(comp)
    comp.add_argument("--seed", type=int, default=0)
    comp.add_argument("--runs", type=int, default=4)
    comp.add_argument("--workers", type=int, default=1)
    comp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("runs", "workers"):
        if getattr(args, name, 1) < 1:
            print(f"config error: --{name} must be at least 1",
                  file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (ConfigError, SimConfigError, OptimizerError, ApproximationError,
            ControllerError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UnstableRunError as exc:
        print(f"unstable run: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
