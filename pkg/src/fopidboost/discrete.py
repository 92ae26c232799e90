"""Discrete-time realization of rational approximations for fixed-step loops.

Each first-order factor (1 + s/wz)/(1 + s/wp) is mapped by the trapezoidal
(bilinear) rule s <- (2/dt)(z-1)/(z+1) to a one-state recurrence.  Integer
powers of s are handled outside the cascade: negative powers become exact
trapezoidal integrators, positive powers become filtered differentiators
s/(1 + s*tau_f), since an exact discrete differentiator is not causal.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

from .oustaloup import RationalApprox

# time constant of the filtered differentiator, in units of dt
DERIVATIVE_FILTER_STEPS = 2.0


class RealizationError(ValueError):
    """Raised for invalid discretization parameters."""


@dataclass
class FirstOrderSection:
    """One-state recurrence  y[n] = b0 u[n] + b1 u[n-1] - a1 y[n-1]."""

    b0: float
    b1: float
    a1: float
    state: float = 0.0  # transposed direct-form II memory

    @classmethod
    def from_corners(cls, wz: float, wp: float, dt: float) -> "FirstOrderSection":
        """Bilinear map of (1 + s/wz)/(1 + s/wp)."""
        cz = 2.0 / (dt * wz)
        cp = 2.0 / (dt * wp)
        den = 1.0 + cp
        return cls(b0=(1.0 + cz) / den, b1=(1.0 - cz) / den, a1=(1.0 - cp) / den)

    @classmethod
    def differentiator(cls, dt: float, filter_steps: float = DERIVATIVE_FILTER_STEPS) -> "FirstOrderSection":
        """Bilinear map of s/(1 + s*tau_f) with tau_f = filter_steps * dt."""
        c = 2.0 / dt
        tau = filter_steps * dt
        den = 1.0 + tau * c
        return cls(b0=c / den, b1=-c / den, a1=(1.0 - tau * c) / den)

    def step(self, u: float) -> float:
        y = self.b0 * u + self.state
        self.state = self.b1 * u - self.a1 * y
        return y

    def reset(self) -> None:
        self.state = 0.0

    def response(self, z: complex) -> complex:
        return (self.b0 + self.b1 / z) / (1.0 + self.a1 / z)


@dataclass
class TrapezoidIntegrator:
    """Exact trapezoidal accumulator  y[n] = y[n-1] + dt/2 (u[n] + u[n-1]).

    The previous-input memory is primed with the first sample after reset,
    so a constant input c integrates to exactly n*dt*c after n steps.
    """

    dt: float
    value: float = 0.0
    u_prev: float = 0.0
    primed: bool = False

    def preview(self, u: float) -> float:
        """Value the integrator would take, without committing state."""
        u_prev = u if not self.primed else self.u_prev
        return self.value + 0.5 * self.dt * (u + u_prev)

    def step(self, u: float) -> float:
        self.value = self.preview(u)
        self.u_prev = u
        self.primed = True
        return self.value

    def commit(self, u: float, value: float) -> float:
        """Adopt a previously previewed value for input u."""
        self.value = value
        self.u_prev = u
        self.primed = True
        return value

    def hold(self, u: float) -> float:
        """Freeze the accumulated value; the skipped input leaves no trace."""
        return self.value

    def reset(self) -> None:
        self.value = 0.0
        self.u_prev = 0.0
        self.primed = False

    def response(self, z: complex) -> complex:
        return 0.5 * self.dt * (z + 1.0) / (z - 1.0)


@dataclass
class DiscreteFilter:
    """Gain, cascade of sections, then exact integrators / filtered differentiators.

    Evaluation order is fixed (gain -> sections -> integrators ->
    differentiators) so a given input sequence always produces a
    bit-identical output sequence.
    """

    dt: float
    gain: float = 1.0
    sections: list[FirstOrderSection] = field(default_factory=list)
    integrators: list[TrapezoidIntegrator] = field(default_factory=list)
    differentiators: list[FirstOrderSection] = field(default_factory=list)

    @property
    def integrator_count(self) -> int:
        return len(self.integrators)

    @property
    def differentiator_count(self) -> int:
        return len(self.differentiators)

    def step(self, u: float) -> float:
        x = self.gain * u
        for sec in self.sections:
            x = sec.step(x)
        for integ in self.integrators:
            x = integ.step(x)
        for diff in self.differentiators:
            x = diff.step(x)
        return x

    def reset(self) -> None:
        for sec in self.sections:
            sec.reset()
        for integ in self.integrators:
            integ.reset()
        for diff in self.differentiators:
            diff.reset()

    def response(self, omega: float) -> complex:
        """Discrete frequency response at omega rad/s (omega < pi/dt)."""
        z = cmath.exp(1j * omega * self.dt)
        h = complex(self.gain)
        for sec in self.sections:
            h *= sec.response(z)
        for integ in self.integrators:
            h *= integ.response(z)
        for diff in self.differentiators:
            h *= diff.response(z)
        return h


def realize(approx: RationalApprox, dt: float) -> DiscreteFilter:
    """Discretize a rational approximation at step dt.

    Sections come from the zero/pole ladder; integer_power < 0 adds exact
    trapezoidal integrators and integer_power > 0 adds filtered
    differentiators.  Corner frequencies should sit well below the Nyquist
    rate; a warning is issued when dt * wp_max >= 2.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise RealizationError(f"dt must be positive, got {dt}")
    if approx.poles and dt * max(approx.poles) >= 2.0:
        warnings.warn(
            f"fastest pole {max(approx.poles):.3g} rad/s is poorly resolved "
            f"at dt={dt:.3g} s (dt*wp >= 2)",
            RuntimeWarning,
            stacklevel=2,
        )
    sections = [FirstOrderSection.from_corners(wz, wp, dt)
                for wz, wp in zip(approx.zeros, approx.poles)]
    integrators = [TrapezoidIntegrator(dt=dt) for _ in range(max(0, -approx.integer_power))]
    differentiators = [FirstOrderSection.differentiator(dt)
                       for _ in range(max(0, approx.integer_power))]
    return DiscreteFilter(
        dt=dt,
        gain=approx.gain,
        sections=sections,
        integrators=integrators,
        differentiators=differentiators,
    )
