"""Three-branch fractional-order PID controller built from discrete filters.

The control law is

    u = sat( Kp * e  +  (Kp/Ti) * I_lam[e]  +  (Kp*Td) * D_mu[e] )

where I_lam realizes s**(-lam) and D_mu realizes s**mu.  The integral
branch is split as s**(-lam) = s**-1 * s**(1-lam): the exact trapezoidal
integrator keeps a true pole at zero (so constant errors integrate without
bound and steady-state error vanishes), while only the bounded fractional
remainder is band-limited.  With lam = mu = 1 both fractional remainders
collapse to identity and the structure is exactly a conventional PID with
a filtered derivative.

Saturation uses conditional integration as anti-windup: the integrator
state freezes whenever the output is saturated and integrating would push
it further out of range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discrete import DiscreteFilter, TrapezoidIntegrator, realize
from .oustaloup import OraConfig, RationalApprox, approximate_power, freq_response

LAMBDA_MAX = 1.2
MU_MAX = 1.2

# duty command ceiling: a boost converter transfers no energy at duty 1
# (switch never opens), so the command must stay strictly below it or a
# saturated startup would latch the loop at zero output forever
DEFAULT_U_MAX = 0.95


class ControllerError(ValueError):
    """Raised for invalid controller parameters."""


@dataclass(frozen=True)
class FopidParams:
    """The five tunables: gain, integral/derivative coefficients and orders."""

    kp: float
    ti: float
    td: float
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kp)):
            raise ControllerError(f"kp must be finite, got {self.kp}")
        if not (self.ti > 0.0 and math.isfinite(self.ti)):
            raise ControllerError(f"ti must be positive, got {self.ti}")
        if not (self.td >= 0.0 and math.isfinite(self.td)):
            raise ControllerError(f"td must be nonnegative, got {self.td}")
        if not (0.0 < self.lam <= LAMBDA_MAX):
            raise ControllerError(f"lam must be in (0, {LAMBDA_MAX}], got {self.lam}")
        if not (0.0 < self.mu <= MU_MAX):
            raise ControllerError(f"mu must be in (0, {MU_MAX}], got {self.mu}")

    @property
    def is_integer_order(self) -> bool:
        return self.lam == 1.0 and self.mu == 1.0

    def as_dict(self) -> dict:
        return {"kp": self.kp, "ti": self.ti, "td": self.td,
                "lam": self.lam, "mu": self.mu}

    @classmethod
    def from_dict(cls, d: dict) -> "FopidParams":
        return cls(kp=float(d["kp"]), ti=float(d["ti"]), td=float(d["td"]),
                   lam=float(d.get("lam", 1.0)), mu=float(d.get("mu", 1.0)))


@dataclass
class Controller:
    """Stateful duty-command controller; single-owner mutable."""

    params: FopidParams
    dt: float
    integral_front: DiscreteFilter   # (Kp/Ti) * s**(1-lam), band-limited
    integrator: TrapezoidIntegrator  # the exact s**-1 factor
    derivative: DiscreteFilter       # (Kp*Td) * s**mu
    integral_approx: RationalApprox
    derivative_approx: RationalApprox
    u_min: float = 0.0
    u_max: float = DEFAULT_U_MAX
    _last_output: float = field(default=0.0, repr=False)

    def __post_init__(self) -> None:
        if self.integral_front.dt != self.dt or self.derivative.dt != self.dt:
            raise ControllerError("controller branches must share the same dt")

    def update(self, error: float) -> float:
        """Advance one sample; returns the saturated duty command."""
        p_out = self.params.kp * error
        d_out = self.derivative.step(error)

        w = self.integral_front.step(error)
        candidate = self.integrator.preview(w)
        unsaturated = p_out + candidate + d_out
        pushing_out = (
            (unsaturated > self.u_max and candidate > self.integrator.value)
            or (unsaturated < self.u_min and candidate < self.integrator.value)
        )
        if pushing_out:
            i_out = self.integrator.hold(w)
        else:
            i_out = self.integrator.commit(w, candidate)

        u = p_out + i_out + d_out
        if u > self.u_max:
            u = self.u_max
        elif u < self.u_min:
            u = self.u_min
        self._last_output = u
        return u

    def reset(self) -> None:
        self.integral_front.reset()
        self.integrator.reset()
        self.derivative.reset()
        self._last_output = 0.0

    # --- flattened view for the simulation kernel ---

    def packed_coefficients(self):
        """Branch gains and section coefficient arrays in evaluation order.

        The derivative branch concatenates its fractional sections and any
        filtered-differentiator sections, which share the same recurrence
        form; the integral branch keeps its single exact integrator apart.
        """
        i_secs = self.integral_front.sections
        d_secs = list(self.derivative.sections) + list(self.derivative.differentiators)

        def coeffs(secs):
            b0 = np.array([s.b0 for s in secs], dtype=np.float64)
            b1 = np.array([s.b1 for s in secs], dtype=np.float64)
            a1 = np.array([s.a1 for s in secs], dtype=np.float64)
            return b0, b1, a1

        return {
            "kp": float(self.params.kp),
            "u_min": float(self.u_min),
            "u_max": float(self.u_max),
            "i_gain": float(self.integral_front.gain),
            "i_coeffs": coeffs(i_secs),
            "d_gain": float(self.derivative.gain),
            "d_coeffs": coeffs(d_secs),
        }


def build_fopid(params: FopidParams, ora: OraConfig, dt: float,
                u_min: float = 0.0, u_max: float = DEFAULT_U_MAX) -> Controller:
    """Assemble the controller from the fractional-power approximations.

    `ora.order_nu` is ignored; the band and section count apply to both
    fractional remainders.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ControllerError(f"dt must be positive, got {dt}")
    band = (ora.omega_l, ora.omega_h)

    i_approx = approximate_power(1.0 - params.lam, band, ora.n_sections)
    d_approx = approximate_power(params.mu, band, ora.n_sections)

    integral_front = realize(i_approx, dt)
    integral_front.gain *= params.kp / params.ti
    derivative = realize(d_approx, dt)
    derivative.gain *= params.kp * params.td

    return Controller(
        params=params,
        dt=dt,
        integral_front=integral_front,
        integrator=TrapezoidIntegrator(dt=dt),
        derivative=derivative,
        integral_approx=i_approx,
        derivative_approx=d_approx,
        u_min=u_min,
        u_max=u_max,
    )


def build_pid(params: FopidParams, ora: OraConfig, dt: float,
              u_min: float = 0.0, u_max: float = DEFAULT_U_MAX) -> Controller:
    """Integer-order special case: forces lam = mu = 1."""
    pid_params = FopidParams(kp=params.kp, ti=params.ti, td=params.td, lam=1.0, mu=1.0)
    return build_fopid(pid_params, ora, dt, u_min=u_min, u_max=u_max)


def ideal_response(params: FopidParams, omega: float) -> complex:
    """Continuous-time Kp (1 + 1/(Ti s**lam) + Td s**mu) at s = j*omega."""
    s = complex(0.0, omega)
    return params.kp * (1.0 + 1.0 / (params.ti * s ** params.lam)
                        + params.td * s ** params.mu)


def built_response(controller: Controller, omega: float) -> complex:
    """Continuous-domain response of the assembled branch structure.

    Uses the rational approximations plus the exact 1/s factor of the
    integral branch; the derivative branch's filtered differentiator is
    idealized as s here (valid well below the Nyquist rate).
    """
    p = controller.params
    s = complex(0.0, omega)
    h_i = freq_response(controller.integral_approx, omega) / s
    h_d = freq_response(controller.derivative_approx, omega)
    return p.kp + (p.kp / p.ti) * h_i + (p.kp * p.td) * h_d
