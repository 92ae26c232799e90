"""Side-by-side run summaries for tuned controllers.

Collects several (params, SimResult) pairs into one table, marks the best
stable run by IAE, and measures how a run rode out an input-voltage step.
Everything here is pure and writes byte-reproducible artifacts: floats go
out through repr and JSON keys are sorted, matching the writers in
`simloop`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .controller import FopidParams
from .simloop import SimResult


class ReportError(ValueError):
    """Raised when a report cannot be assembled from the given runs."""


@dataclass(frozen=True)
class ReportRow:
    run_id: int
    params: FopidParams
    j_iae: float | None
    overshoot_pct: float | None
    settling_time: float | None
    switch_count: int | None
    stable: bool
    blowup_time: float | None


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ReportRow, ...]
    best_run_id: int

    @property
    def best(self) -> ReportRow:
        return self.rows[self.best_run_id]


def build_report(runs: list[tuple[FopidParams, SimResult]]) -> ComparisonReport:
    """Tabulate runs in id order and mark the stable one with minimal IAE.

    Run ids are positional.  Unstable runs are listed but never win; ties
    break toward the lowest id.  Raises ReportError when no run is stable.
    """
    if not runs:
        raise ReportError("no runs to report")
    rows = []
    for run_id, (params, result) in enumerate(runs):
        rows.append(ReportRow(
            run_id=run_id,
            params=params,
            j_iae=result.j_iae,
            overshoot_pct=result.overshoot_pct,
            settling_time=result.settling_time,
            switch_count=result.switch_count,
            stable=result.stable,
            blowup_time=result.blowup_time,
        ))
    best_id = None
    for row in rows:
        if not row.stable:
            continue
        if best_id is None or row.j_iae < rows[best_id].j_iae:
            best_id = row.run_id
    if best_id is None:
        raise ReportError("all runs unstable, no best to mark")
    return ComparisonReport(rows=tuple(rows), best_run_id=best_id)


def disturbance_metrics(time, v_avg, v_ref: float, t_dist: float,
                        band: float = 0.02):
    """Peak deviation and recovery time after a disturbance at t_dist.

    Returns (max |v_avg - v_ref| over t >= t_dist, recovery time).  Recovery
    is the first re-entry into the +-band*v_ref envelope that then holds to
    the end of the trace, measured from t_dist; None when the trace ends
    outside the band.
    """
    time = np.asarray(time, dtype=float)
    v_avg = np.asarray(v_avg, dtype=float)
    if time.shape != v_avg.shape or time.ndim != 1 or time.size == 0:
        raise ReportError("time and v_avg must be matching 1-d arrays")
    if time[-1] < t_dist:
        raise ReportError(
            f"trace ends at {time[-1]} s, before the disturbance at {t_dist} s")
    after = time >= t_dist
    dev = np.abs(v_avg[after] - v_ref)
    max_dev = float(np.max(dev))
    tol = band * abs(v_ref)
    violated = np.flatnonzero(dev > tol)
    if violated.size == 0:
        return max_dev, 0.0
    last = violated[-1]
    if last == dev.size - 1:
        return max_dev, None
    t_after = time[after]
    return max_dev, float(t_after[last + 1] - t_dist)


def switch_reduction_pct(pid_count: int, fopid_count: int) -> float:
    """Percent fewer transitions the FOPID run made than the PID run."""
    if pid_count <= 0:
        raise ReportError(f"need a positive PID count, got {pid_count}")
    return 100.0 * (1.0 - fopid_count / pid_count)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_report_csv(report: ComparisonReport, path) -> None:
    header = ("run_id,kp,ti,td,lam,mu,j_iae_vs,overshoot_pct,"
              "settling_time_s,switch_count,stable,best\n")
    with open(path, "w", newline="\n") as fh:
        fh.write(header)
        for row in report.rows:
            p = row.params
            cells = [str(row.run_id), _cell(p.kp), _cell(p.ti), _cell(p.td),
                     _cell(p.lam), _cell(p.mu), _cell(row.j_iae),
                     _cell(row.overshoot_pct), _cell(row.settling_time),
                     _cell(row.switch_count), _cell(row.stable),
                     str(int(row.run_id == report.best_run_id))]
            fh.write(",".join(cells) + "\n")


def report_dict(report: ComparisonReport) -> dict:
    rows = []
    for row in report.rows:
        p = row.params
        rows.append({
            "run_id": row.run_id,
            "params": {"kp": p.kp, "ti": p.ti, "td": p.td,
                       "lam": p.lam, "mu": p.mu},
            "j_iae_vs": row.j_iae,
            "overshoot_pct": row.overshoot_pct,
            "settling_time_s": row.settling_time,
            "switch_count": row.switch_count,
            "stable": row.stable,
            "blowup_time_s": row.blowup_time,
        })
    return {"rows": rows, "best_run_id": report.best_run_id}


def write_report_json(report: ComparisonReport, path,
                      extra: dict | None = None) -> None:
    doc = report_dict(report)
    if extra:
        doc.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_gnuplot_columns(path, x, y, labels=("time_s", "value")) -> None:
    """Two-column whitespace-separated file for external plotting."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ReportError("columns must be matching 1-d arrays")
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# {labels[0]} {labels[1]}\n")
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r} {float(b)!r}\n")
