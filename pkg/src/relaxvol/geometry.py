"""Independent geometric ground truth for the relaxation bodies.

Membership is decided directly from the defining inequalities, so the Monte
Carlo estimates produced here never touch the closed-form volume formulas
they are used to verify.  Sampling is rejection over the tight box
[0, hi] x [0, f(hi)] x [0, 1], streamed in fixed-size chunks of a
counter-based generator keyed by (seed, chunk index): estimates are
bit-reproducible no matter how the chunks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, DomainError, InputError
from .functions import (
    BoundPair,
    ConvexFunction,
    EnvelopeFunction,
    PowerFunction,
    build_envelope,
    secant,
)
from .volumes import Cap, RelaxationKind, RelaxationSpec

__all__ = [
    "Point3",
    "McEstimate",
    "contains",
    "contains_batch",
    "mc_volume",
    "verify_nesting",
    "power_cone_form",
    "mfcq_certificate",
    "perspective_constraint_gradient",
]

_CHUNK = 1 << 16
_NESTING_SEED = 0


@dataclass(frozen=True)
class Point3:
    """A point in (x, y, z)-space; components must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            c = float(getattr(self, name))
            if not math.isfinite(c):
                raise DomainError(f"point components must be finite, got {c}")
            object.__setattr__(self, name, c)


@dataclass(frozen=True)
class McEstimate:
    """Rejection-sampling volume estimate with its binomial standard error."""

    volume: float
    std_error: float
    samples: int
    seed: int


class _Body:
    """Precompiled membership test for one (relaxation, function, bounds)."""

    def __init__(self, relax: RelaxationSpec, f: ConvexFunction, bounds: BoundPair):
        self.relax = relax
        self.bounds = bounds
        kind = relax.kind
        if kind is RelaxationKind.POWER_INTERPOLATED:
            if not isinstance(f, PowerFunction):
                raise CapabilityError("interpolated bodies need a power cost")
            if relax.q > f.p - 1.0 + 1e-12:
                raise DomainError(f"q={relax.q} exceeds p-1={f.p - 1.0}")
        if kind is RelaxationKind.NAIVE:
            if not f.vanishes_at_zero() or f.domain_hi < bounds.hi:
                raise DomainError("naive body needs f on [0, hi] with f(0) = 0")
        if kind is RelaxationKind.NAIVE_PIECEWISE and not isinstance(f, EnvelopeFunction):
            f = build_envelope(f, bounds)
        self.f = f
        # cap coefficients: y <= cap_z * z + cap_x * x
        if relax.cap is Cap.SECANT:
            m, c0 = secant(f, bounds)
            self.cap_z, self.cap_x = c0, m
        else:
            self.cap_z, self.cap_x = float(f.evaluate(bounds.hi)), 0.0
        self.y_max = float(f.evaluate(bounds.hi))

    def contains(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        # Out-of-wedge points are already rejected by `ok`, so the function
        # arguments below may be clipped into the wedge for evaluation safety
        # without changing any decision.
        lo, hi = self.bounds.lo, self.bounds.hi
        ok = (z >= 0.0) & (z <= 1.0) & (x >= lo * z) & (x <= hi * z)
        ok &= y <= self.cap_z * z + self.cap_x * x
        kind = self.relax.kind
        if kind is RelaxationKind.PERSPECTIVE:
            pos = z > 0.0
            ratio = np.divide(x, z, out=np.full_like(x, lo), where=pos)
            lower = np.zeros_like(x)
            lower[pos] = z[pos] * np.asarray(
                self.f._eval(np.clip(ratio[pos], lo, hi)), dtype=float)
            ok &= (y >= 0.0)
            ok &= np.where(pos, y >= lower, (x == 0.0) & (y == 0.0))
        elif kind in (RelaxationKind.NAIVE, RelaxationKind.NAIVE_PIECEWISE):
            ok &= y >= np.asarray(self.f._eval(np.clip(x, 0.0, hi)), dtype=float)
        else:  # POWER_INTERPOLATED, with the 0**0 = 1 convention
            q = float(self.relax.q)
            p = self.f.p
            if q == 0.0:
                zq = np.ones_like(z)
            else:
                zq = np.where(z > 0.0, np.power(np.maximum(z, 1e-300), q), 0.0)
            ok &= (y >= 0.0) & (y * zq >= np.maximum(x, 0.0) ** p)
        return ok


def contains(relax: RelaxationSpec, f: ConvexFunction, bounds: BoundPair,
             pt: Point3) -> bool:
    """True iff pt satisfies every defining inequality of the body."""
    body = _Body(relax, f, bounds)
    x = np.array([pt.x]); y = np.array([pt.y]); z = np.array([pt.z])
    return bool(body.contains(x, y, z)[0])


def contains_batch(relax: RelaxationSpec, f: ConvexFunction, bounds: BoundPair,
                   x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized membership over parallel coordinate arrays."""
    body = _Body(relax, f, bounds)
    return body.contains(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float))


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InputError(f"seed must fit in an unsigned 64-bit word, got {seed}")
    return seed


def mc_volume(relax: RelaxationSpec, f: ConvexFunction, bounds: BoundPair,
              samples: int, seed: int) -> McEstimate:
    """Rejection-sampling estimate of the body volume.

    Uniform proposals over [0, hi] x [0, f(hi)] x [0, 1]; both caps attain
    their maximum y = f(hi) at (hi, 1), so the box is tight and valid for
    every supported body.
    """
    if samples < 10_000:
        raise InputError(f"need at least 10^4 samples, got {samples}")
    seed = _check_seed(seed)
    body = _Body(relax, f, bounds)
    if body.y_max <= 0.0:
        raise DomainError("f(hi) must be positive to bound the sampling box")
    hi, fy = bounds.hi, body.y_max
    box = hi * fy
    hits = 0
    done = 0
    index = 0
    while done < samples:
        m = min(_CHUNK, samples - done)
        pts = _chunk_rng(seed, index).random((m, 3))
        hits += int(np.count_nonzero(
            body.contains(pts[:, 0] * hi, pts[:, 1] * fy, pts[:, 2])))
        done += m
        index += 1
    frac = hits / samples
    return McEstimate(
        volume=box * frac,
        std_error=box * math.sqrt(frac * (1.0 - frac) / samples),
        samples=samples,
        seed=seed,
    )


def verify_nesting(p: float, q_list: list[float], bounds: BoundPair,
                   samples: int, cap: Cap = Cap.SIMPLE_BOUND) -> bool:
    """Check by sampling that the power bodies shrink as q grows.

    True iff every sampled point inside the body for some q is also inside
    the body for every smaller q in the list.  q_list must be sorted
    ascending within [0, p-1].
    """
    qs = [float(q) for q in q_list]
    if sorted(qs) != qs:
        raise InputError("q_list must be sorted ascending")
    if qs and (qs[0] < 0.0 or qs[-1] > p - 1.0 + 1e-12):
        raise InputError("q_list entries must lie within [0, p-1]")
    f = PowerFunction(p)
    bodies = [_Body(RelaxationSpec(RelaxationKind.POWER_INTERPOLATED, cap, q), f, bounds)
              for q in qs]
    hi, fy = bounds.hi, float(f.evaluate(bounds.hi))
    done = 0
    index = 0
    while done < samples:
        m = min(_CHUNK, samples - done)
        pts = _chunk_rng(_NESTING_SEED, index).random((m, 3))
        x, y, z = pts[:, 0] * hi, pts[:, 1] * fy, pts[:, 2]
        inside = [b.contains(x, y, z) for b in bodies]
        for j in range(len(bodies) - 1):
            if np.any(inside[j + 1] & ~inside[j]):
                return False
        done += m
        index += 1
    return True


def power_cone_form(p: float, q: float, u: float) -> tuple[float, float, float]:
    """Exponent vector of the higher-dimensional power-cone slice for the body.

    With an auxiliary variable pinned to 1 by a linear equation, the
    inequality y*z**q >= x**p becomes y**(1/p) * z**(q/p) * w**((p-q-1)/p)
    >= x.  The exponents are nonnegative and sum to 1 for q in [1, p-1].
    """
    if not p > 1.0:
        raise DomainError(f"need p > 1, got {p}")
    if not u > 0.0:
        raise DomainError(f"need u > 0, got {u}")
    if q < 1.0:
        raise CapabilityError("cone representation available for q >= 1 only")
    if q > p - 1.0 + 1e-12:
        raise DomainError(f"need q <= p-1, got q={q} for p={p}")
    return (1.0 / p, q / p, max(p - q - 1.0, 0.0) / p)


def mfcq_certificate(f: ConvexFunction, bounds: BoundPair,
                     alpha: float) -> tuple[tuple[float, float, float], bool]:
    """Strictly feasible direction certifying MFCQ at the origin of the
    naive body.

    For alpha strictly between 1 + lo/hi and 2, the direction is
    (1, m - ((hi+lo)/(alpha*hi)) * (m - f(lo)/lo), (hi+lo)/(2*hi*lo)) with m
    the secant slope.  ``strict`` reports whether all three inequality
    conditions hold at the returned direction: the wedge condition
    hi*dz > 1 > lo*dz, the cost condition f'(0) < dy, and a negative inner
    product with the cap gradient.
    """
    if not f.vanishes_at_zero():
        raise DomainError("certificate needs f(0) = 0 and f differentiable at 0")
    lo, hi = bounds.lo, bounds.hi
    if not (1.0 + lo / hi) < alpha < 2.0:
        raise DomainError(
            f"alpha must lie strictly inside ({1.0 + lo / hi}, 2), got {alpha}")
    m, _ = secant(f, bounds)
    chord0 = float(f.evaluate(lo)) / lo
    dy = m - (hi + lo) / (alpha * hi) * (m - chord0)
    dz = (hi + lo) / (2.0 * hi * lo)
    cap_dot = (hi + lo) / hi * (m - chord0) * (0.5 - 1.0 / alpha)
    strict = (hi * dz > 1.0 > lo * dz
              and float(f.derivative(0.0)) - dy < 0.0
              and cap_dot < 0.0)
    return (1.0, dy, dz), strict


def perspective_constraint_gradient(p: float, pt: Point3) -> tuple[float, float, float]:
    """Gradient of x**p - y*z at a point.

    At the origin this is the zero vector for every p > 1, which is why no
    strictly feasible direction can certify MFCQ for the perspective body.
    """
    if not p > 1.0:
        raise DomainError(f"need p > 1, got {p}")
    gx = p * pt.x ** (p - 1.0) if pt.x != 0.0 else 0.0
    return (gx, -pt.z, -pt.y)
