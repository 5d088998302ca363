"""Closed-form volumes, gaps, ratios, and thresholds for the relaxation bodies.

All bodies live in (x, y, z)-space over the on/off disjunction with operating
range [lo, hi].  Four lower-bound kinds are supported (perspective, naive,
naive-on-envelope, and the power-interpolated family y*z**q >= x**p) and two
caps (the secant through (lo, f(lo)) and (hi, f(hi)), or the simpler
y <= z*f(hi)).  Power-family formulas are evaluated in the ratio
parameterization k = lo/hi with a factored hi**(p+1), which stays accurate
as k -> 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy.integrate import quad

from .errors import CapabilityError, DomainError, NumericalError
from .functions import (
    BoundPair,
    ConvexFunction,
    EnvelopeFunction,
    ExponentialFunction,
    PowerFunction,
    build_envelope,
    secant,
)

__all__ = [
    "Cap",
    "RelaxationKind",
    "RelaxationSpec",
    "VolumeMethod",
    "VolumeReport",
    "vol_perspective",
    "vol_naive_simple",
    "vol_naive_capped",
    "vol_delta",
    "vol_power_family",
    "vol_piecewise",
    "vol_diff",
    "vol_ratio",
    "piecewise_gain_ratio",
    "threshold_k",
    "exp_asymptotic_ratio",
    "volume_of",
]

_QUAD_EPS = 1e-11


class Cap(Enum):
    """Upper bound on y: the secant chord, or the box bound y <= z*f(hi)."""

    SECANT = "secant"
    SIMPLE_BOUND = "simple"


class RelaxationKind(Enum):
    PERSPECTIVE = "perspective"
    NAIVE = "naive"
    NAIVE_PIECEWISE = "piecewise"
    POWER_INTERPOLATED = "power-interpolated"


@dataclass(frozen=True)
class RelaxationSpec:
    """Which convex body: lower-bound kind, cap, and (for the power family) q."""

    kind: RelaxationKind
    cap: Cap = Cap.SECANT
    q: float | None = None

    def __post_init__(self):
        if self.kind is RelaxationKind.POWER_INTERPOLATED:
            if self.q is None or not math.isfinite(self.q) or self.q < 0.0:
                raise DomainError("power-interpolated relaxation needs q >= 0")
        elif self.q is not None:
            raise DomainError(f"q is only meaningful for the power family, got q={self.q}")

    def label(self) -> str:
        base = f"q:{self.q:g}" if self.kind is RelaxationKind.POWER_INTERPOLATED else self.kind.value
        return f"{base}/{self.cap.value}"


class VolumeMethod(Enum):
    CLOSED_FORM = "closed-form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class VolumeReport:
    """A 3-dimensional volume with the method that produced it.

    abs_error is 0 for closed forms, the quadrature error estimate, or one
    standard error for Monte Carlo.
    """

    value: float
    method: VolumeMethod
    abs_error: float = 0.0

    def __post_init__(self):
        if self.value < -1e-9:
            raise DomainError(f"negative volume {self.value}")
        if self.abs_error < 0.0:
            raise DomainError("abs_error must be nonnegative")
        object.__setattr__(self, "value", max(float(self.value), 0.0))


def _one_minus_pow(k: float, e: float) -> float:
    """1 - k**e for k in (0, 1], accurate when k is close to 1."""
    if k <= 0.0:
        return 1.0
    return -math.expm1(e * math.log(k))


def _require_nonnegative_on(f: ConvexFunction, bounds: BoundPair) -> None:
    # All supported families are increasing, so the minimum sits at lo.
    if float(f.evaluate(bounds.lo)) < 0.0:
        raise DomainError("f must be nonnegative on the bound interval")


def _require_naive_compatible(f: ConvexFunction, bounds: BoundPair) -> None:
    """The uncapped body needs f defined on [0, hi], increasing, f(0) = 0."""
    if f.domain_lo != 0.0 or f.domain_hi < bounds.hi:
        raise DomainError("naive relaxation needs f defined on all of [0, hi]")
    if not f.vanishes_at_zero():
        raise DomainError("naive relaxation needs f(0) = 0")


def vol_perspective(f: ConvexFunction, bounds: BoundPair) -> VolumeReport:
    """Volume of the secant-capped perspective hull: a pyramid with apex 0.

    Equals (hi - lo)*(f(hi) + f(lo))/6 minus one third of the integral of f
    over [lo, hi]; exact for every family since the antiderivatives are
    closed form.
    """
    _require_nonnegative_on(f, bounds)
    lo, hi = bounds.lo, bounds.hi
    value = (hi - lo) * (float(f.evaluate(hi)) + float(f.evaluate(lo))) / 6.0 \
        - f.definite_integral(lo, hi) / 3.0
    return VolumeReport(value, VolumeMethod.CLOSED_FORM)


def _sbar_from_moments(f: ConvexFunction, bounds: BoundPair) -> float:
    # vol of the simply-capped body via the sliced double integral, reduced to
    # the exact moments I1 = int x f' dx and I2 = int x^2 f' dx by parts:
    #   vol = (u-l)/(2ul) * I2(0,l) - I2(l,u)/(2u) + I1(l,u)
    #         - l*(f(u)-f(l))/2 - (u-l)*f(u)/6
    lo, hi = bounds.lo, bounds.hi

    def boundary2(x1, x2):
        return (x2 * x2 * float(f.evaluate(x2)) - x1 * x1 * float(f.evaluate(x1))
                - 2.0 * f.first_moment(x1, x2))

    def boundary1(x1, x2):
        return (x2 * float(f.evaluate(x2)) - x1 * float(f.evaluate(x1))
                - f.definite_integral(x1, x2))

    f_lo, f_hi = float(f.evaluate(lo)), float(f.evaluate(hi))
    return ((hi - lo) / (2.0 * hi * lo) * boundary2(0.0, lo)
            - boundary2(lo, hi) / (2.0 * hi)
            + boundary1(lo, hi)
            - lo * (f_hi - f_lo) / 2.0
            - (hi - lo) * f_hi / 6.0)


def _sbar_from_quadrature(f: ConvexFunction, bounds: BoundPair) -> tuple[float, float]:
    # Same double integral, but the outer y-integral is adaptive quadrature.
    # The inner z-integrals are polynomials in z and already integrated; the
    # integrand changes form at y = f(lo), and the inverse may have kinks.
    lo, hi = bounds.lo, bounds.hi
    f_lo, f_hi = float(f.evaluate(lo)), float(f.evaluate(hi))

    def area_low(y):
        w = f.inverse(y)
        return w * w * (hi - lo) / (2.0 * hi * lo) - (hi - lo) * y * y / (2.0 * f_hi * f_hi)

    def area_high(y):
        w = f.inverse(y)
        return -w * w / (2.0 * hi) + w - lo / 2.0 - (hi - lo) * y * y / (2.0 * f_hi * f_hi)

    kinks = [k for k in f.inverse_kinks() if 0.0 < k < f_hi]
    pts_low = [k for k in kinks if k < f_lo] or None
    pts_high = [k for k in kinks if f_lo < k < f_hi] or None
    v1, e1 = quad(area_low, 0.0, f_lo, epsabs=_QUAD_EPS, epsrel=_QUAD_EPS,
                  limit=200, points=pts_low)
    v2, e2 = quad(area_high, f_lo, f_hi, epsabs=_QUAD_EPS, epsrel=_QUAD_EPS,
                  limit=200, points=pts_high)
    return v1 + v2, e1 + e2


def vol_naive_simple(f: ConvexFunction, bounds: BoundPair) -> VolumeReport:
    """Volume of the body with lower bound y >= f(x) and cap y <= z*f(hi).

    Closed form (exact moments) for power and exponential families;
    adaptive quadrature on the outer slice integral for envelopes.
    """
    _require_naive_compatible(f, bounds)
    if isinstance(f, (PowerFunction, ExponentialFunction)):
        return VolumeReport(_sbar_from_moments(f, bounds), VolumeMethod.CLOSED_FORM)
    value, err = _sbar_from_quadrature(f, bounds)
    return VolumeReport(value, VolumeMethod.QUADRATURE, err)


def vol_naive_capped(f: ConvexFunction, bounds: BoundPair) -> VolumeReport:
    """Volume of the secant-capped naive body: simple-cap volume minus the
    simplex wedge (hi - lo)*(f(hi) - f(lo))/6 between the two caps."""
    simple = vol_naive_simple(f, bounds)
    delta = vol_delta(f, bounds)
    return VolumeReport(simple.value - delta.value, simple.method, simple.abs_error)


def vol_delta(f: ConvexFunction, bounds: BoundPair) -> VolumeReport:
    """Volume of the simplex separating the simple cap from the secant cap.

    conv{(0,0,0), (lo,f(lo),1), (lo,f(hi),1), (hi,f(hi),1)} has volume
    (f(hi) - f(lo))*(hi - lo)/6.
    """
    _require_nonnegative_on(f, bounds)
    lo, hi = bounds.lo, bounds.hi
    value = (float(f.evaluate(hi)) - float(f.evaluate(lo))) * (hi - lo) / 6.0
    return VolumeReport(value, VolumeMethod.CLOSED_FORM)


def vol_power_family(p: float, q: float, bounds: BoundPair, cap: Cap) -> VolumeReport:
    """Volume of the interpolated power body {y*z**q >= x**p} with a cap.

    q = 0 is the naive body, q = p-1 the perspective hull.  Evaluated as
    hi**(p+1) * [C0*(1-k) - 3k*(1-k**p)] / (3(p+1)(p-q+2)) with
    C0 = p^2 - pq + 3p - q - 1 and k = lo/hi; the secant cap subtracts
    hi**(p+1) * (1-k**p)(1-k)/6.
    """
    if not p > 1.0:
        raise DomainError(f"need p > 1, got {p}")
    if not -1e-12 <= q <= p - 1.0 + 1e-12:
        raise DomainError(f"need 0 <= q <= p-1, got q={q} for p={p}")
    q = min(max(q, 0.0), p - 1.0)
    k = bounds.ratio
    scale = bounds.hi ** (p + 1.0)
    c0 = p * p - p * q + 3.0 * p - q - 1.0
    numer = c0 * (1.0 - k) - 3.0 * k * _one_minus_pow(k, p)
    value = scale * numer / (3.0 * (p + 1.0) * (p - q + 2.0))
    if cap is Cap.SECANT:
        value -= scale * _one_minus_pow(k, p) * (1.0 - k) / 6.0
    return VolumeReport(value, VolumeMethod.CLOSED_FORM)


def vol_piecewise(f: ConvexFunction, bounds: BoundPair) -> VolumeReport:
    """Volume of the secant-capped naive body built on the envelope of f.

    Computed by applying the naive-capped volume to the envelope g.  For
    powers the tangency point is lo, and the volume collapses to the closed
    form naive - gain_ratio*(naive - perspective).
    """
    if isinstance(f, PowerFunction):
        naive = vol_power_family(f.p, 0.0, bounds, Cap.SECANT).value
        persp = vol_power_family(f.p, f.p - 1.0, bounds, Cap.SECANT).value
        gain = piecewise_gain_ratio(f.p, bounds.ratio)
        return VolumeReport(naive - gain * (naive - persp), VolumeMethod.CLOSED_FORM)
    g = f if isinstance(f, EnvelopeFunction) else build_envelope(f, bounds)
    return vol_naive_capped(g, bounds)


def vol_diff(p: float, q1: float, q2: float, bounds: BoundPair) -> float:
    """Exact volume removed when the lifting exponent moves from q1 up to q2.

    (q2 - q1)*(hi**(p+1) - lo**(p+1)) / ((p+1)(p-q1+2)(p-q2+2)); zero when
    q1 == q2.
    """
    if not p > 1.0:
        raise DomainError(f"need p > 1, got {p}")
    if not -1e-12 <= q1 <= q2 <= p - 1.0 + 1e-12:
        raise DomainError(f"need 0 <= q1 <= q2 <= p-1, got ({q1}, {q2})")
    k = bounds.ratio
    scale = bounds.hi ** (p + 1.0)
    return (scale * (q2 - q1) * _one_minus_pow(k, p + 1.0)
            / ((p + 1.0) * (p - q1 + 2.0) * (p - q2 + 2.0)))


def vol_ratio(p: float, q1: float, q2: float, k: float) -> tuple[float, float]:
    """Fraction of the q1-body volume removed by tightening to q2.

    Returns (ratio, lower_bound).  The ratio depends on the bounds only
    through k = lo/hi; the bound 6(q2-q1)/((p-q2+2)(p^2+3p-q1(p+1)-4)) is
    independent of k and is approached only as k -> 0.
    """
    if not p > 1.0:
        raise DomainError(f"need p > 1, got {p}")
    if not -1e-12 <= q1 < q2 <= p - 1.0 + 1e-12:
        raise DomainError(f"need 0 <= q1 < q2 <= p-1, got ({q1}, {q2})")
    if not 0.0 < k < 1.0:
        raise DomainError(f"need k in (0,1), got {k}")
    denom_chord = (1.0 - k) * (1.0 + k**p)
    t_num = _one_minus_pow(k, p + 1.0) / denom_chord
    t_cap = (1.0 + k) * _one_minus_pow(k, p) / denom_chord
    c1 = p * p + 3.0 * p - q1 * (p + 1.0) - 1.0
    ratio = 6.0 * (q2 - q1) * t_num / ((p - q2 + 2.0) * (c1 - 3.0 * t_cap))
    lower = 6.0 * (q2 - q1) / ((p - q2 + 2.0) * (c1 - 3.0))
    return ratio, lower


def piecewise_gain_ratio(p: float, k: float) -> float:
    """Fraction of the naive-to-perspective gap closed by the envelope body.

    (p+1)(1-k)*k**(p+1) / (1 - k**(p+1)); increasing in k, with limits 0 at
    k -> 0 and 1 at k -> 1.
    """
    if not p > 1.0:
        raise DomainError(f"need p > 1, got {p}")
    if not 0.0 < k < 1.0:
        raise DomainError(f"need k in (0,1), got {k}")
    return (p + 1.0) * (1.0 - k) * k ** (p + 1.0) / _one_minus_pow(k, p + 1.0)


def threshold_k(p: float, phi: float) -> float:
    """Smallest bound ratio at which the envelope closes fraction phi of the gap.

    Bisection on the monotone residual piecewise_gain_ratio(p, k) - phi,
    to an interval of width 1e-10.
    """
    if not p > 1.0:
        raise DomainError(f"need p > 1, got {p}")
    if not 0.0 < phi < 1.0:
        raise DomainError(f"need phi in (0,1), got {phi}")
    lo, hi = 1e-16, 1.0 - 1e-16
    for _ in range(200):
        if hi - lo <= 1e-10:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if piecewise_gain_ratio(p, mid) < phi:
            lo = mid
        else:
            hi = mid
    raise NumericalError("threshold bisection did not converge in 200 iterations")


def exp_asymptotic_ratio(b: float, k: float, u: float) -> float:
    """Width-normalized excess of the naive body over the perspective hull
    for f(x) = b**x - 1 with lo = k*u.

    Returns (u - lo) * (vol_naive - vol_perspective) / vol_naive, computed
    with all exponentials scaled by b**(-u) so that arbitrarily large u*ln(b)
    never overflows.  For fixed k the value converges to 2/ln(b) as u grows.
    """
    if not b > 1.0:
        raise DomainError(f"need b > 1, got {b}")
    if not 0.0 < k < 1.0:
        raise DomainError(f"need k in (0,1), got {k}")
    if not u > 0.0:
        raise DomainError(f"need u > 0, got {u}")
    ln_b = math.log(b)
    lo = k * u
    shrink_gap = math.exp(-(u - lo) * ln_b)     # b**(lo - u)
    shrink_all = math.exp(-u * ln_b)            # b**(-u)
    tail = ((1.0 - shrink_all) / u - (shrink_gap - shrink_all) / lo) / ln_b**2
    naive = (u - lo) * (1.0 + shrink_gap + shrink_all) / 6.0 - tail
    diff = (u - lo) * shrink_all / 6.0 + (1.0 - shrink_gap) / (3.0 * ln_b) - tail
    if naive <= 0.0 or not math.isfinite(naive):
        raise NumericalError("naive volume underflowed in the scaled evaluation")
    return (u - lo) * diff / naive


def volume_of(relax: RelaxationSpec, f: ConvexFunction, bounds: BoundPair) -> VolumeReport:
    """Volume of any supported body; single entry point used by the CLI."""
    kind, cap = relax.kind, relax.cap
    if kind is RelaxationKind.PERSPECTIVE:
        report = vol_perspective(f, bounds)
        if cap is Cap.SIMPLE_BOUND:
            report = VolumeReport(report.value + vol_delta(f, bounds).value,
                                  report.method, report.abs_error)
        return report
    if kind is RelaxationKind.NAIVE:
        return vol_naive_capped(f, bounds) if cap is Cap.SECANT else vol_naive_simple(f, bounds)
    if kind is RelaxationKind.NAIVE_PIECEWISE:
        if cap is Cap.SECANT:
            return vol_piecewise(f, bounds)
        g = f if isinstance(f, EnvelopeFunction) else build_envelope(f, bounds)
        return vol_naive_simple(g, bounds)
    if kind is RelaxationKind.POWER_INTERPOLATED:
        if not isinstance(f, PowerFunction):
            raise CapabilityError("interpolated bodies are defined for power costs only")
        return vol_power_family(f.p, float(relax.q), bounds, cap)
    raise CapabilityError(f"unknown relaxation kind {kind!r}")
