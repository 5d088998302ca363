"""Univariate convex cost families and the origin-anchored envelope.

Three families are supported: powers x**p with p > 1, shifted exponentials
b**x + a with b > 1, and the two-piece envelope obtained by replacing a
convex function below its tangency point with the steepest line through the
origin that stays underneath it.  Every family exposes exact evaluation,
derivative, inverse, and antiderivatives; nothing here is approximated by
finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, DomainError

__all__ = [
    "BoundPair",
    "ConvexFunction",
    "PowerFunction",
    "ExponentialFunction",
    "EnvelopeFunction",
    "secant",
    "build_envelope",
    "function_to_json",
    "function_from_json",
]

_BISECT_TOL = 1e-12


@dataclass(frozen=True)
class BoundPair:
    """Validated operating range (lo, hi) with 0 < lo < hi."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError(f"bounds must be finite, got ({self.lo}, {self.hi})")
        if not 0.0 < lo < hi:
            raise DomainError(f"bounds must satisfy 0 < lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def ratio(self) -> float:
        """lo/hi, always in (0, 1)."""
        return self.lo / self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


class ConvexFunction:
    """Base class: a nonnegative-domain convex function with exact calculus.

    Subclasses implement ``_eval``, ``_derivative``, ``_inverse``,
    ``_antiderivative`` (of f) and ``_antiderivative_x`` (of x*f(x)); the
    public methods add domain checking.  ``evaluate`` accepts scalars or
    numpy arrays.  Instances are immutable and safe to share across threads.
    """

    kind: str = "abstract"
    domain_lo: float = 0.0
    domain_hi: float = math.inf

    # -- subclass hooks -----------------------------------------------------

    def _eval(self, x):
        raise NotImplementedError

    def _derivative(self, x):
        raise NotImplementedError

    def _inverse(self, y: float) -> float:
        raise NotImplementedError

    def _antiderivative(self, x: float) -> float:
        raise NotImplementedError

    def _antiderivative_x(self, x: float) -> float:
        raise NotImplementedError

    # -- public surface -----------------------------------------------------

    def _check_domain(self, x) -> None:
        arr = np.asarray(x, dtype=float)
        if np.any(arr < self.domain_lo - 1e-15) or np.any(arr > self.domain_hi):
            raise DomainError(
                f"argument outside domain [{self.domain_lo}, {self.domain_hi}]"
            )

    def evaluate(self, x):
        """f(x); x may be a scalar or an ndarray inside the domain."""
        self._check_domain(x)
        return self._eval(x)

    def __call__(self, x):
        return self.evaluate(x)

    def derivative(self, x):
        """Exact (right) derivative of f at x."""
        self._check_domain(x)
        return self._derivative(x)

    def inverse(self, y: float) -> float:
        """x with f(x) = y, for y in the range of f over the domain."""
        y = float(y)
        y_lo = self._eval(self.domain_lo)
        if y < y_lo - 1e-12:
            raise DomainError(f"y={y} below the range of {self.kind}")
        if math.isfinite(self.domain_hi) and y > self._eval(self.domain_hi) + 1e-12:
            raise DomainError(f"y={y} above the range of {self.kind}")
        return self._inverse(min(max(y, y_lo), math.inf))

    def definite_integral(self, lo: float, hi: float) -> float:
        """Exact integral of f over [lo, hi] via closed-form antiderivatives."""
        if lo > hi:
            raise DomainError(f"integration bounds out of order: [{lo}, {hi}]")
        self._check_domain([lo, hi])
        return self._antiderivative(hi) - self._antiderivative(lo)

    def first_moment(self, lo: float, hi: float) -> float:
        """Exact integral of x*f(x) over [lo, hi]."""
        if lo > hi:
            raise DomainError(f"integration bounds out of order: [{lo}, {hi}]")
        self._check_domain([lo, hi])
        return self._antiderivative_x(hi) - self._antiderivative_x(lo)

    def inverse_kinks(self) -> list[float]:
        """y-values where the inverse changes analytic form (none by default)."""
        return []

    def vanishes_at_zero(self) -> bool:
        """True when f(0) = 0, which the uncapped relaxations require."""
        return self.domain_lo == 0.0 and abs(float(self._eval(0.0))) <= 1e-12


@dataclass(frozen=True)
class PowerFunction(ConvexFunction):
    """f(x) = x**p with p > 1, increasing and convex on [0, inf)."""

    p: float = 2.0
    domain_lo: float = 0.0
    domain_hi: float = math.inf
    kind: str = field(default="power", init=False, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 1.0):
            raise DomainError(f"power exponent must satisfy p > 1, got {self.p}")
        if not 0.0 <= self.domain_lo < self.domain_hi:
            raise DomainError("invalid domain")

    def _eval(self, x):
        return np.asarray(x, dtype=float) ** self.p if isinstance(x, np.ndarray) else float(x) ** self.p

    def _derivative(self, x):
        return self.p * np.power(x, self.p - 1.0)

    def _inverse(self, y: float) -> float:
        return max(y, 0.0) ** (1.0 / self.p)

    def _antiderivative(self, x: float) -> float:
        return x ** (self.p + 1.0) / (self.p + 1.0)

    def _antiderivative_x(self, x: float) -> float:
        return x ** (self.p + 2.0) / (self.p + 2.0)


@dataclass(frozen=True)
class ExponentialFunction(ConvexFunction):
    """f(x) = b**x + a with b > 1; increasing and convex everywhere."""

    b: float = math.e
    a: float = -1.0
    domain_lo: float = 0.0
    domain_hi: float = math.inf
    kind: str = field(default="exp", init=False, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b > 1.0):
            raise DomainError(f"exponential base must satisfy b > 1, got {self.b}")
        if not math.isfinite(self.a):
            raise DomainError("shift must be finite")
        if not 0.0 <= self.domain_lo < self.domain_hi:
            raise DomainError("invalid domain")

    @property
    def _ln_b(self) -> float:
        return math.log(self.b)

    def _eval(self, x):
        return np.exp(np.multiply(x, self._ln_b)) + self.a

    def _derivative(self, x):
        return self._ln_b * np.exp(np.multiply(x, self._ln_b))

    def _inverse(self, y: float) -> float:
        shifted = y - self.a
        if shifted <= 0.0:
            raise DomainError(f"y={y} not in the range of b**x + a with a={self.a}")
        return math.log(shifted) / self._ln_b

    def _antiderivative(self, x: float) -> float:
        return math.exp(x * self._ln_b) / self._ln_b + self.a * x

    def _antiderivative_x(self, x: float) -> float:
        lb = self._ln_b
        return math.exp(x * lb) * (x / lb - 1.0 / lb**2) + self.a * x * x / 2.0


@dataclass(frozen=True)
class EnvelopeFunction(ConvexFunction):
    """Two-piece convex function: slope*x on [0, breakpoint], base(x) above.

    The slope equals base(breakpoint)/breakpoint, so the pieces meet
    continuously and the whole function is increasing from the origin.
    """

    base: ConvexFunction = None
    breakpoint: float = 1.0
    slope: float = 1.0
    domain_lo: float = 0.0
    domain_hi: float = math.inf
    kind: str = field(default="envelope", init=False, repr=False)

    def __post_init__(self):
        if self.base is None:
            raise DomainError("envelope requires a base function")
        if not (math.isfinite(self.breakpoint) and self.breakpoint > 0.0):
            raise DomainError(f"breakpoint must be positive, got {self.breakpoint}")
        if not (math.isfinite(self.slope) and self.slope > 0.0):
            raise DomainError(f"slope must be positive, got {self.slope}")
        base_val = float(self.base.evaluate(self.breakpoint))
        if abs(self.slope * self.breakpoint - base_val) > 1e-9 * max(1.0, abs(base_val)):
            raise DomainError(
                "pieces do not meet: slope*breakpoint != base(breakpoint)"
            )
        if self.domain_lo != 0.0:
            raise DomainError("envelope domain starts at 0")

    def _eval(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.where(arr <= self.breakpoint, self.slope * arr, self.base._eval(np.maximum(arr, self.breakpoint)))
        return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out

    def _derivative(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.where(arr < self.breakpoint, self.slope, self.base._derivative(np.maximum(arr, self.breakpoint)))
        return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out

    def _inverse(self, y: float) -> float:
        # Bracketing bisection; the function is strictly increasing from 0.
        lo = 0.0
        hi = self.breakpoint
        while float(self._eval(hi)) < y:
            hi *= 2.0
            if hi > 1e300:
                raise DomainError(f"y={y} not attained")
        for _ in range(200):
            if hi - lo <= _BISECT_TOL * max(1.0, hi):
                break
            mid = 0.5 * (lo + hi)
            if float(self._eval(mid)) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def _antiderivative(self, x: float) -> float:
        bp = self.breakpoint
        if x <= bp:
            return 0.5 * self.slope * x * x
        return 0.5 * self.slope * bp * bp + (
            self.base._antiderivative(x) - self.base._antiderivative(bp)
        )

    def _antiderivative_x(self, x: float) -> float:
        bp = self.breakpoint
        if x <= bp:
            return self.slope * x**3 / 3.0
        return self.slope * bp**3 / 3.0 + (
            self.base._antiderivative_x(x) - self.base._antiderivative_x(bp)
        )

    def inverse_kinks(self) -> list[float]:
        return [self.slope * self.breakpoint]


def secant(f: ConvexFunction, bounds: BoundPair) -> tuple[float, float]:
    """Secant line of f between the bounds.

    Returns (slope, intercept_coeff). The slope is
    (f(hi) - f(lo)) / (hi - lo) and intercept_coeff = f(lo) - slope*lo is
    the coefficient that multiplies the indicator when the cap is
    homogenized, i.e. the cap reads y <= intercept_coeff*z + slope*x.
    """
    f_lo = float(f.evaluate(bounds.lo))
    f_hi = float(f.evaluate(bounds.hi))
    slope = (f_hi - f_lo) / (bounds.hi - bounds.lo)
    return slope, f_lo - slope * bounds.lo


def build_envelope(f: ConvexFunction, bounds: BoundPair) -> EnvelopeFunction:
    """Tightest convex underestimator of f on [lo, hi] anchored at the origin.

    The result is linear with slope f(a)/a up to the tangency point a and
    equals f above it.  The point a is the first x in [lo, hi] where
    f(x) <= x * f'(x); the monotone residual x*f'(x) - f(x) is bisected to
    1e-12 when the crossing is interior, and a clamps to an endpoint when
    the residual does not change sign on [lo, hi].

    Raises DomainError when f is not strictly positive on [lo, hi].
    """
    lo, hi = bounds.lo, bounds.hi
    if float(f.evaluate(lo)) <= 0.0:
        raise DomainError("envelope requires f > 0 on the bound interval")

    def residual(x: float) -> float:
        return x * float(f.derivative(x)) - float(f.evaluate(x))

    if residual(lo) >= 0.0:
        a = lo
    elif residual(hi) <= 0.0:
        a = hi
    else:
        left, right = lo, hi
        for _ in range(200):
            if right - left <= _BISECT_TOL * max(1.0, right):
                break
            mid = 0.5 * (left + right)
            if residual(mid) < 0.0:
                left = mid
            else:
                right = mid
        a = 0.5 * (left + right)

    slope = float(f.evaluate(a)) / a
    return EnvelopeFunction(base=f, breakpoint=a, slope=slope, domain_hi=f.domain_hi)


def function_to_json(f: ConvexFunction) -> dict:
    """Serialize a function spec to the JSON object used by the CLI."""
    if isinstance(f, PowerFunction):
        return {"kind": "power", "p": f.p}
    if isinstance(f, ExponentialFunction):
        return {"kind": "exp", "b": f.b, "a": f.a}
    if isinstance(f, EnvelopeFunction):
        return {
            "kind": "envelope",
            "base": function_to_json(f.base),
            "breakpoint": f.breakpoint,
            "slope": f.slope,
        }
    raise CapabilityError(f"cannot serialize function of type {type(f)!r}")


def function_from_json(obj: dict) -> ConvexFunction:
    """Inverse of :func:`function_to_json`."""
    kind = obj.get("kind")
    if kind == "power":
        return PowerFunction(p=float(obj["p"]))
    if kind == "exp":
        return ExponentialFunction(b=float(obj["b"]), a=float(obj["a"]))
    if kind == "envelope":
        return EnvelopeFunction(
            base=function_from_json(obj["base"]),
            breakpoint=float(obj["breakpoint"]),
            slope=float(obj["slope"]),
        )
    raise CapabilityError(f"unknown function kind {kind!r}")
