"""Closed-loop simulation of the converter under a duty-command controller.

Wiring per plant step: measure v_out, form error = v_ref - v_out, update the
controller, latch/compare the PWM carrier, integrate the plant one RK4 step.
A breaker aborts any run whose states exceed a threshold so doomed candidates
cost almost nothing during optimization.

The inner loop is compiled (see `kernels`); this module owns scenario
validation, result assembly, the trace-level metric functions and the
CSV/JSON artifact writers.  Artifacts are byte-reproducible: floats are
written with repr (shortest round-trip) and JSON keys are sorted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .controller import Controller
from .converter import ConverterParams, PwmModulator

# plant integration runs this many RK4 steps per carrier period
STEPS_PER_PERIOD = 200
DEFAULT_BREAK_THRESHOLD = 1e6
SETTLING_BAND = 0.02


class SimConfigError(ValueError):
    """Raised for inconsistent simulation configuration."""


def plant_timestep(f_sw: float, steps_per_period: int = STEPS_PER_PERIOD) -> float:
    """The plant (and controller) step implied by the carrier frequency."""
    if not (f_sw > 0.0 and math.isfinite(f_sw)):
        raise SimConfigError(f"f_sw must be positive, got {f_sw}")
    return 1.0 / (f_sw * steps_per_period)


@dataclass(frozen=True)
class Disturbance:
    """Multiplicative step on the input voltage: v_g *= 1 + relative_step."""

    time: float
    relative_step: float

    def __post_init__(self) -> None:
        if not (self.time >= 0.0 and math.isfinite(self.time)):
            raise SimConfigError(f"disturbance time must be >= 0, got {self.time}")
        if not (self.relative_step > -1.0 and math.isfinite(self.relative_step)):
            raise SimConfigError(
                f"relative_step must exceed -1, got {self.relative_step}")


@dataclass(frozen=True)
class Scenario:
    v_ref: float = 12.0
    horizon: float = 0.05
    disturbance: Disturbance | None = None
    record_decimation: int = 1

    def __post_init__(self) -> None:
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise SimConfigError(f"horizon must be positive, got {self.horizon}")
        if not math.isfinite(self.v_ref):
            raise SimConfigError(f"v_ref must be finite, got {self.v_ref}")
        if self.record_decimation < 1:
            raise SimConfigError(
                f"record_decimation must be >= 1, got {self.record_decimation}")
        if self.disturbance is not None and self.disturbance.time > self.horizon:
            raise SimConfigError(
                f"disturbance at t={self.disturbance.time} lies outside the "
                f"horizon {self.horizon}")


@dataclass
class SimResult:
    """Decimated traces plus scalar metrics of one closed-loop run.

    When the breaker fires, `stable` is False, `blowup_time` is set, the
    trace ends at the last finite sample and the scalar metrics are None.
    A None `settling_time` on a stable run means the band was never held.
    """

    time: np.ndarray
    v_out: np.ndarray
    i_l: np.ndarray
    v_c: np.ndarray
    duty: np.ndarray
    switch_state: np.ndarray
    v_avg: np.ndarray
    dt: float
    v_ref: float
    f_sw: float
    record_decimation: int
    stable: bool
    blowup_time: float | None
    j_iae: float | None
    overshoot_pct: float | None
    settling_time: float | None
    switch_count: int | None


def _run(plant: ConverterParams, modulator: PwmModulator, scenario: Scenario,
         break_threshold: float, x0: tuple[float, float],
         use_controller: bool, packed: dict | None,
         duty0: float, duty1: float, duty_switch_k: int) -> SimResult:
    dt = plant_timestep(modulator.f_sw)
    n_steps = round(scenario.horizon / dt)
    if n_steps < 1:
        raise SimConfigError(
            f"horizon {scenario.horizon} is shorter than one step {dt}")
    spp = STEPS_PER_PERIOD
    phase_steps = round(modulator.phase * spp) % spp

    if scenario.disturbance is not None:
        dist_k = round(scenario.disturbance.time / dt)
        dist_factor = 1.0 + scenario.disturbance.relative_step
    else:
        dist_k = -1
        dist_factor = 1.0

    if packed is None:
        empty = np.empty(0, dtype=np.float64)
        kp = u_min = 0.0
        u_max = 1.0
        i_gain = d_gain = 0.0
        i_b0 = i_b1 = i_a1 = d_b0 = d_b1 = d_a1 = empty
    else:
        kp = packed["kp"]
        u_min = packed["u_min"]
        u_max = packed["u_max"]
        i_gain = packed["i_gain"]
        i_b0, i_b1, i_a1 = packed["i_coeffs"]
        d_gain = packed["d_gain"]
        d_b0, d_b1, d_a1 = packed["d_coeffs"]

    (status, blowup_k,
     rec_k, rec_vout, rec_il, rec_vc, rec_duty, rec_sw, rec_vbar,
     iae_acc, vbar_max, last_violation, n_switch) = kernels.closed_loop(
        plant.r_load, plant.l_filter, plant.r_l, plant.r_c, plant.c_filter,
        plant.v_g, float(x0[0]), float(x0[1]),
        dt, n_steps, spp, phase_steps,
        scenario.v_ref, dist_k, dist_factor, break_threshold,
        use_controller, duty0, duty1, duty_switch_k,
        kp, u_min, u_max,
        i_gain, i_b0, i_b1, i_a1,
        d_gain, d_b0, d_b1, d_a1,
        scenario.record_decimation)

    stable = status == kernels.OK
    if stable:
        overshoot_pct = 100.0 * max(0.0, vbar_max - scenario.v_ref) / scenario.v_ref
        if last_violation == -1:
            settling = 0.0
        elif last_violation >= n_steps:
            settling = None
        else:
            settling = (last_violation + 1) * dt
        result_metrics = dict(j_iae=iae_acc, overshoot_pct=overshoot_pct,
                              settling_time=settling, switch_count=int(n_switch),
                              blowup_time=None)
    else:
        result_metrics = dict(j_iae=None, overshoot_pct=None,
                              settling_time=None, switch_count=None,
                              blowup_time=blowup_k * dt)

    return SimResult(
        time=rec_k * dt,
        v_out=rec_vout,
        i_l=rec_il,
        v_c=rec_vc,
        duty=rec_duty,
        switch_state=rec_sw,
        v_avg=rec_vbar,
        dt=dt,
        v_ref=scenario.v_ref,
        f_sw=modulator.f_sw,
        record_decimation=scenario.record_decimation,
        stable=stable,
        **result_metrics,
    )


def simulate(controller: Controller, plant: ConverterParams,
             modulator: PwmModulator, scenario: Scenario,
             break_threshold: float = DEFAULT_BREAK_THRESHOLD,
             x0: tuple[float, float] = (0.0, 0.0)) -> SimResult:
    """Closed-loop run from a fresh controller state.

    The passed controller is used only as a coefficient source; its own
    mutable state is neither read nor advanced.
    """
    dt = plant_timestep(modulator.f_sw)
    if controller.dt != dt:
        raise SimConfigError(
            f"controller dt {controller.dt} != plant dt {dt}; build the "
            f"controller with plant_timestep(f_sw)")
    packed = controller.packed_coefficients()
    return _run(plant, modulator, scenario, break_threshold, x0,
                True, packed, 0.0, 0.0, 0)


def simulate_fixed_duty(duty: float, plant: ConverterParams,
                        modulator: PwmModulator, scenario: Scenario,
                        duty_after: float | None = None,
                        step_time: float | None = None,
                        break_threshold: float = DEFAULT_BREAK_THRESHOLD,
                        x0: tuple[float, float] = (0.0, 0.0)) -> SimResult:
    """Open-loop run at a fixed duty, optionally stepping to duty_after."""
    for d in (duty, duty_after):
        if d is not None and not (0.0 <= d <= 1.0):
            raise SimConfigError(f"duty must lie in [0, 1], got {d}")
    dt = plant_timestep(modulator.f_sw)
    n_steps = round(scenario.horizon / dt)
    if duty_after is None or step_time is None:
        duty1 = duty
        switch_k = n_steps + 1
    else:
        duty1 = duty_after
        switch_k = round(step_time / dt)
    return _run(plant, modulator, scenario, break_threshold, x0,
                False, None, duty, duty1, switch_k)


# --- trace-level metric functions ---

def iae(time: np.ndarray, v_out: np.ndarray, v_ref: float, horizon: float) -> float:
    """Trapezoidal integral of |v_out - v_ref| over [0, horizon]."""
    time = np.asarray(time, dtype=np.float64)
    v_out = np.asarray(v_out, dtype=np.float64)
    if time.size < 2 or time[-1] < horizon - 1e-12:
        raise ValueError(f"trace spans {time[-1] if time.size else 0.0} s, "
                         f"shorter than the requested {horizon} s")
    mask = time <= horizon + 1e-12
    return float(np.trapezoid(np.abs(v_out[mask] - v_ref), time[mask]))


def ripple_average(v_out: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average over `window` samples, partial at the start."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    v = np.asarray(v_out, dtype=np.float64)
    cs = np.cumsum(v)
    out = np.empty_like(v)
    w = min(window, v.size)
    out[:w] = cs[:w] / np.arange(1, w + 1)
    if v.size > window:
        out[window:] = (cs[window:] - cs[:-window]) / window
    return out


def overshoot(v_avg: np.ndarray, v_ref: float) -> float:
    """Percent by which the ripple-filtered output exceeds the reference."""
    peak = float(np.max(v_avg))
    return 100.0 * max(0.0, peak - v_ref) / v_ref


def settling_time(time: np.ndarray, v_avg: np.ndarray, v_ref: float,
                  band: float = SETTLING_BAND) -> float | None:
    """Earliest time after which the filtered trace stays within the band.

    Returns None when the band is never held through the end of the trace.
    """
    time = np.asarray(time, dtype=np.float64)
    dev = np.abs(np.asarray(v_avg, dtype=np.float64) - v_ref)
    violations = np.nonzero(dev > band * abs(v_ref))[0]
    if violations.size == 0:
        return 0.0
    last = int(violations[-1])
    if last == time.size - 1:
        return None
    return float(time[last + 1])


def switch_count(time: np.ndarray, switch_state: np.ndarray,
                 t_start: float = 0.0, t_end: float | None = None) -> int:
    """Gate transitions whose edge time falls in (t_start, t_end]."""
    time = np.asarray(time, dtype=np.float64)
    sw = np.asarray(switch_state)
    if t_end is None:
        t_end = float(time[-1])
    changed = sw[1:] != sw[:-1]
    t_edge = time[1:]
    in_window = (t_edge > t_start) & (t_edge <= t_end + 1e-12)
    return int(np.count_nonzero(changed & in_window))


# --- artifact writers ---

def export_trace_csv(result: SimResult, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("time_s,v_out_V,i_l_A,duty,switch_state\n")
        for t, v, i, d, s in zip(result.time, result.v_out, result.i_l,
                                 result.duty, result.switch_state):
            fh.write(f"{float(t)!r},{float(v)!r},{float(i)!r},"
                     f"{float(d)!r},{int(s)}\n")


def summary_dict(result: SimResult) -> dict:
    return {
        "j_iae_vs": result.j_iae,
        "overshoot_pct": result.overshoot_pct,
        "settling_time_s": result.settling_time,
        "switch_count": result.switch_count,
        "stable": result.stable,
        "blowup_time_s": result.blowup_time,
        "horizon_s": float(result.time[-1]) if result.stable else None,
        "v_ref": result.v_ref,
    }


def write_summary_json(result: SimResult, path, extra: dict | None = None) -> None:
    doc = summary_dict(result)
    if extra:
        doc.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def metrics_only(scenario: Scenario) -> Scenario:
    """Variant of a scenario that records almost nothing (optimizer use)."""
    n_steps = max(1, round(scenario.horizon * 1e9))
    return replace(scenario, record_decimation=n_steps)
