"""Band-limited rational approximation of fractional powers of s.

The Oustaloup recursive approximation replaces s**nu (0 < nu < 1) on a
frequency band [omega_l, omega_h] by a cascade of N interlaced first-order
zero/pole pairs,

    s**nu  ~=  k * prod_n (1 + s/wz_n) / (1 + s/wp_n),

with the corner frequencies generated by the recursion

    wz_1    = omega_l * sqrt(eta)
    wp_n    = wz_n * alpha
    wz_n+1  = wp_n * eta
    alpha   = (omega_h/omega_l) ** (nu/N)
    eta     = (omega_h/omega_l) ** ((1-nu)/N)

and k scaled for unit magnitude at 1 rad/s.  Exponents outside (0, 1) are
split into an exact integer power of s carried symbolically plus a
fractional remainder that the recursion can handle.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field


class ApproximationError(ValueError):
    """Raised for invalid approximation configurations."""


@dataclass(frozen=True)
class OraConfig:
    """Configuration of one recursive approximation run."""

    order_nu: float
    omega_l: float
    omega_h: float
    n_sections: int

    def __post_init__(self) -> None:
        if not (self.omega_l > 0.0 and math.isfinite(self.omega_l)):
            raise ApproximationError(f"omega_l must be positive, got {self.omega_l}")
        if not (self.omega_h > self.omega_l):
            raise ApproximationError(
                f"band is degenerate: omega_h={self.omega_h} <= omega_l={self.omega_l}"
            )
        if self.n_sections < 1:
            raise ApproximationError(f"n_sections must be >= 1, got {self.n_sections}")


@dataclass(frozen=True)
class RationalApprox:
    """Zero/pole/gain realization of s**nu plus an exact integer power of s.

    The represented operator is  s**integer_power * H(s)  with
    H(s) = gain * prod (1 + s/zeros[n]) / (1 + s/poles[n]).
    """

    zeros: tuple[float, ...]
    poles: tuple[float, ...]
    gain: float
    integer_power: int = 0
    # band kept for downstream realization choices (warnings, bode grids)
    omega_l: float = field(default=0.0, compare=False)
    omega_h: float = field(default=0.0, compare=False)

    def __post_init__(self) -> None:
        if len(self.zeros) != len(self.poles):
            raise ApproximationError("zeros and poles must have equal length")
        for w in (*self.zeros, *self.poles):
            if not (w > 0.0 and math.isfinite(w)):
                raise ApproximationError(f"corner frequencies must be positive, got {w}")
        if not (self.gain > 0.0 and math.isfinite(self.gain)):
            raise ApproximationError(f"gain must be positive, got {self.gain}")

    @property
    def n_sections(self) -> int:
        return len(self.zeros)

    @property
    def is_identity(self) -> bool:
        return self.n_sections == 0 and self.integer_power == 0 and self.gain == 1.0

    def inverse(self) -> "RationalApprox":
        """Exact reciprocal: zeros and poles swapped, gain inverted."""
        return RationalApprox(
            zeros=self.poles,
            poles=self.zeros,
            gain=1.0 / self.gain,
            integer_power=-self.integer_power,
            omega_l=self.omega_l,
            omega_h=self.omega_h,
        )


IDENTITY = RationalApprox(zeros=(), poles=(), gain=1.0, integer_power=0)


def _rational_at(zeros, poles, omega: float) -> complex:
    h = complex(1.0, 0.0)
    for wz, wp in zip(zeros, poles):
        h *= complex(1.0, omega / wz) / complex(1.0, omega / wp)
    return h


def ora_build(cfg: OraConfig) -> RationalApprox:
    """Run the pole/zero recursion for nu in (0, 1) and normalize the gain."""
    nu = cfg.order_nu
    if not (0.0 < nu < 1.0):
        raise ApproximationError(f"ora_build requires 0 < nu < 1, got {nu}")

    ratio = cfg.omega_h / cfg.omega_l
    n = cfg.n_sections
    alpha = ratio ** (nu / n)
    eta = ratio ** ((1.0 - nu) / n)

    zeros = []
    poles = []
    wz = cfg.omega_l * math.sqrt(eta)
    for _ in range(n):
        wp = wz * alpha
        zeros.append(wz)
        poles.append(wp)
        wz = wp * eta

    approx = RationalApprox(
        zeros=tuple(zeros),
        poles=tuple(poles),
        gain=1.0,
        integer_power=0,
        omega_l=cfg.omega_l,
        omega_h=cfg.omega_h,
    )
    return normalize_gain(approx)


def normalize_gain(approx: RationalApprox) -> RationalApprox:
    """Rescale the gain so the rational part has unit magnitude at 1 rad/s.

    The integer power of s is excluded: it contributes exactly unit
    magnitude at 1 rad/s anyway.
    """
    mag = abs(_rational_at(approx.zeros, approx.poles, 1.0))
    return RationalApprox(
        zeros=approx.zeros,
        poles=approx.poles,
        gain=1.0 / mag,
        integer_power=approx.integer_power,
        omega_l=approx.omega_l,
        omega_h=approx.omega_h,
    )


def approximate_power(nu: float, band: tuple[float, float], n_sections: int) -> RationalApprox:
    """Approximate s**nu for any real nu over the given band.

    nu >= 0 is split as nu = n + delta with n = floor(nu) and delta in
    [0, 1); the integer part is stored symbolically and only the fractional
    remainder is approximated (identity when delta == 0).  nu < 0 returns
    the literal elementwise inverse of the approximation of -nu, so
    composing the two is exact, not merely approximate.
    """
    omega_l, omega_h = band
    if nu < 0.0:
        return approximate_power(-nu, band, n_sections).inverse()

    n_int = math.floor(nu)
    delta = nu - n_int
    if delta == 0.0:
        return RationalApprox(
            zeros=(), poles=(), gain=1.0, integer_power=n_int,
            omega_l=omega_l, omega_h=omega_h,
        )
    built = ora_build(OraConfig(order_nu=delta, omega_l=omega_l,
                                omega_h=omega_h, n_sections=n_sections))
    return RationalApprox(
        zeros=built.zeros,
        poles=built.poles,
        gain=built.gain,
        integer_power=n_int,
        omega_l=omega_l,
        omega_h=omega_h,
    )


def freq_response(approx: RationalApprox, omega: float) -> complex:
    """Evaluate gain * prod (1+jw/wz)/(1+jw/wp) * (jw)**integer_power."""
    if not omega > 0.0:
        raise ApproximationError(f"freq_response requires omega > 0, got {omega}")
    h = approx.gain * _rational_at(approx.zeros, approx.poles, omega)
    if approx.integer_power:
        h *= complex(0.0, omega) ** approx.integer_power
    return h


def freq_response_grid(approx: RationalApprox, omegas) -> list[complex]:
    return [freq_response(approx, float(w)) for w in omegas]


def magnitude_slope(approx: RationalApprox, omega: float, rel_step: float = 1e-3) -> float:
    """Local slope d(log10 |H|) / d(log10 omega), by central difference."""
    w_lo = omega * (1.0 - rel_step)
    w_hi = omega * (1.0 + rel_step)
    m_lo = abs(freq_response(approx, w_lo))
    m_hi = abs(freq_response(approx, w_hi))
    return (math.log10(m_hi) - math.log10(m_lo)) / (math.log10(w_hi) - math.log10(w_lo))


def phase_deg(approx: RationalApprox, omega: float) -> float:
    return math.degrees(cmath.phase(freq_response(approx, omega)))
