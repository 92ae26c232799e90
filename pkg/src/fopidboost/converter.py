"""Switched nonlinear model of a boost DC-DC converter with parasitics.

States are the inductor current i_l and capacitor voltage v_c.  With the
switch conducting the inductor charges from the source while the capacitor
feeds the load; with the switch open the diode routes the inductor into
the output node.  The capacitor ESR r_c makes the output voltage an
algebraic mix of v_c and (when the diode conducts) i_l:

    qbar  = 0 if switch on else 1
    v_out = (R*v_c + R*r_c*qbar*i_l) / (R + r_c)
    di_l/dt = (v_g - r_l*i_l - qbar*v_out) / L
    dv_c/dt = (qbar*i_l - v_out/R) / C

The diode is ideal: if the current reaches zero while the switch is open
it is clamped there (discontinuous conduction) until the switch closes
again.  Integration is classical RK4 with the switch held over the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


class PlantError(ValueError):
    """Raised for invalid circuit or modulator parameters."""


@dataclass(frozen=True)
class ConverterParams:
    """Circuit constants; defaults are the 5 V -> 12 V bench converter."""

    r_load: float = 25.0        # load resistance [ohm]
    l_filter: float = 250e-6    # filter inductance [H]
    r_l: float = 0.075          # inductor series resistance [ohm]
    c_filter: float = 1056e-6   # filter capacitance [F]
    r_c: float = 0.0375         # capacitor ESR [ohm]
    v_g: float = 5.0            # input voltage [V]

    def __post_init__(self) -> None:
        for name in ("r_load", "l_filter", "c_filter"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise PlantError(f"{name} must be strictly positive, got {value}")
        # parasitics and the source may be zero (ideal-loss or unpowered tests)
        for name in ("r_l", "r_c", "v_g"):
            value = getattr(self, name)
            if not (value >= 0.0 and math.isfinite(value)):
                raise PlantError(f"{name} must be nonnegative, got {value}")

    def with_input(self, v_g: float) -> "ConverterParams":
        return replace(self, v_g=v_g)


@dataclass
class ConverterState:
    i_l: float = 0.0            # inductor current [A]
    v_c: float = 0.0            # capacitor voltage [V]
    diode_blocking: bool = False


@dataclass
class PwmModulator:
    """Trailing-edge sawtooth comparator with once-per-period duty latch."""

    f_sw: float = 10e3          # carrier frequency [Hz]
    phase: float = 0.0          # carrier phase offset in [0, 1)

    def __post_init__(self) -> None:
        if not (self.f_sw > 0.0 and math.isfinite(self.f_sw)):
            raise PlantError(f"f_sw must be positive, got {self.f_sw}")
        if not (0.0 <= self.phase < 1.0):
            raise PlantError(f"phase must lie in [0, 1), got {self.phase}")
        self._latched_duty = 0.0
        self._period_index: int | None = None

    def reset(self) -> None:
        self._latched_duty = 0.0
        self._period_index = None

    def gate(self, duty: float, t: float) -> bool:
        """Switch command at time t; duty is sampled at each period start."""
        duty = min(max(duty, 0.0), 1.0)
        x = t * self.f_sw + self.phase
        period = math.floor(x)
        if period != self._period_index:
            self._period_index = period
            self._latched_duty = duty
        return (x - period) < self._latched_duty


def pwm_gate(modulator: PwmModulator, duty: float, t: float) -> bool:
    return modulator.gate(duty, t)


def output_voltage(state: ConverterState, switch_on: bool, p: ConverterParams) -> float:
    qbar = 0.0 if switch_on else 1.0
    i_l = 0.0 if (state.diode_blocking and not switch_on) else state.i_l
    return (p.r_load * state.v_c + p.r_load * p.r_c * qbar * i_l) / (p.r_load + p.r_c)


def derivatives(state: ConverterState, switch_on: bool, p: ConverterParams) -> tuple[float, float]:
    """(di_l/dt, dv_c/dt) for the active circuit topology."""
    if state.diode_blocking and not switch_on:
        # discontinuous conduction: inductor idle, capacitor into the load
        v_out = p.r_load * state.v_c / (p.r_load + p.r_c)
        return 0.0, -v_out / (p.r_load * p.c_filter)
    qbar = 0.0 if switch_on else 1.0
    v_out = (p.r_load * state.v_c + p.r_load * p.r_c * qbar * state.i_l) / (p.r_load + p.r_c)
    di_l = (p.v_g - p.r_l * state.i_l - qbar * v_out) / p.l_filter
    dv_c = (qbar * state.i_l - v_out / p.r_load) / p.c_filter
    return di_l, dv_c


def step_state(state: ConverterState, switch_on: bool, p: ConverterParams,
               dt: float) -> ConverterState:
    """One RK4 step with the switch held; applies the diode clamp afterwards."""
    if not dt > 0.0:
        raise PlantError(f"dt must be positive, got {dt}")

    blocking = state.diode_blocking and not switch_on

    def f(i_l: float, v_c: float) -> tuple[float, float]:
        return derivatives(ConverterState(i_l, v_c, blocking), switch_on, p)

    i0, v0 = state.i_l, state.v_c
    if blocking:
        i0 = 0.0
    k1i, k1v = f(i0, v0)
    k2i, k2v = f(i0 + 0.5 * dt * k1i, v0 + 0.5 * dt * k1v)
    k3i, k3v = f(i0 + 0.5 * dt * k2i, v0 + 0.5 * dt * k2v)
    k4i, k4v = f(i0 + dt * k3i, v0 + dt * k3v)
    i_new = i0 + dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
    v_new = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

    if switch_on:
        return ConverterState(i_l=i_new, v_c=v_new, diode_blocking=False)
    if blocking or i_new < 0.0:
        return ConverterState(i_l=0.0, v_c=v_new, diode_blocking=True)
    return ConverterState(i_l=i_new, v_c=v_new, diode_blocking=False)
