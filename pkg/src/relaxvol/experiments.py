"""Experiment harness: seeded instances, relaxation solves, budget sweeps.

The knapsack-covering experiment puts a quadratic cost on each activity
level, a fixed cost on each indicator, and one covering constraint; the
mean-variance experiment adds a cardinality cap and a variance epigraph.
Per variable, the solver uses either the plain bound y_i >= x_i^2 or its
perspective tightening y_i*z_i >= x_i^2, so sweeping the set of tightened
variables reproduces the lower-bound-versus-budget curves.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .advisor import RankingStrategy, profile, rank
from .barrier import KnapsackModel, MeanVarModel, solve_barrier
from .errors import InputError
from .functions import BoundPair

__all__ = [
    "KnapsackInstance",
    "MeanVarianceInstance",
    "SolveStatus",
    "SolveResult",
    "SweepRow",
    "generate_knapsack",
    "generate_meanvar",
    "solve_relaxation",
    "solve_meanvar",
    "run_budget_sweep",
    "sweep_to_csv",
]

_L_FLOOR = 1e-9   # lower bounds must stay strictly positive


@dataclass(frozen=True)
class KnapsackInstance:
    """Covering instance: all data positive, u = l + delta, b = a'(l + delta/4)."""

    n: int
    a: np.ndarray
    f: np.ndarray
    c: np.ndarray
    l: np.ndarray
    u: np.ndarray
    delta: np.ndarray
    b: float

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "a": self.a.tolist(),
            "f": self.f.tolist(),
            "c": self.c.tolist(),
            "l": self.l.tolist(),
            "u": self.u.tolist(),
            "b": self.b,
        }

    @staticmethod
    def from_json(obj: dict) -> "KnapsackInstance":
        arrays = {k: np.asarray(obj[k], float) for k in ("a", "f", "c", "l", "u")}
        return KnapsackInstance(
            n=int(obj["n"]),
            a=arrays["a"], f=arrays["f"], c=arrays["c"],
            l=arrays["l"], u=arrays["u"],
            delta=arrays["u"] - arrays["l"],
            b=float(obj["b"]),
        )

    def bound_pairs(self) -> list[BoundPair]:
        return [BoundPair(float(lo), float(hi)) for lo, hi in zip(self.l, self.u)]


@dataclass(frozen=True)
class MeanVarianceInstance:
    """Mean-variance instance with cardinality cap kappa and Cholesky factor M."""

    n: int
    a: np.ndarray
    c: np.ndarray
    l: np.ndarray
    u: np.ndarray
    b: float
    kappa: int
    M: np.ndarray

    def to_json(self) -> dict:
        tri = [float(self.M[i, j]) for i in range(self.n) for j in range(i + 1)]
        return {
            "n": self.n,
            "a": self.a.tolist(),
            "c": self.c.tolist(),
            "l": self.l.tolist(),
            "u": self.u.tolist(),
            "b": self.b,
            "kappa": self.kappa,
            "M": tri,
        }

    @staticmethod
    def from_json(obj: dict) -> "MeanVarianceInstance":
        n = int(obj["n"])
        tri = list(map(float, obj["M"]))
        if len(tri) != n * (n + 1) // 2:
            raise InputError("M must hold the row-major lower triangle")
        M = np.zeros((n, n))
        pos = 0
        for i in range(n):
            M[i, : i + 1] = tri[pos: pos + i + 1]
            pos += i + 1
        return MeanVarianceInstance(
            n=n,
            a=np.asarray(obj["a"], float),
            c=np.asarray(obj["c"], float),
            l=np.asarray(obj["l"], float),
            u=np.asarray(obj["u"], float),
            b=float(obj["b"]),
            kappa=int(obj["kappa"]),
            M=M,
        )

    def bound_pairs(self) -> list[BoundPair]:
        return [BoundPair(float(lo), float(hi)) for lo, hi in zip(self.l, self.u)]


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max-iter"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolveResult:
    """Barrier solve outcome; objective is a lower bound for the 0/1 problem
    up to the reported gap."""

    objective: float
    kkt_residual: float
    iterations: int
    status: SolveStatus
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    v: float | None = None


@dataclass(frozen=True)
class SweepRow:
    strategy: str
    fraction: float
    objective: float
    kkt_residual: float
    seconds: float


def generate_knapsack(n: int, seed: int) -> KnapsackInstance:
    """Seeded instance: a ~ U(1,1.2), f ~ U(10,10.2), l ~ U(0,20),
    delta ~ U(10,11), c ~ U(0,1), u = l + delta, b = a'(l + delta/4).

    l is floored at 1e-9 so every lower bound is strictly positive.
    """
    if n < 1:
        raise InputError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(int(seed))
    a = rng.uniform(1.0, 1.2, n)
    f = rng.uniform(10.0, 10.2, n)
    l = np.maximum(rng.uniform(0.0, 20.0, n), _L_FLOOR)
    delta = rng.uniform(10.0, 11.0, n)
    c = rng.uniform(0.0, 1.0, n)
    u = l + delta
    b = float(a @ (l + delta / 4.0))
    return KnapsackInstance(n=n, a=a, f=f, c=c, l=l, u=u, delta=delta, b=b)


def generate_meanvar(n: int, seed: int) -> MeanVarianceInstance:
    """Seeded mean-variance instance: same marginals as the knapsack draw
    (without f), kappa = floor(0.8 n), M lower-triangular U(0, 0.0025)."""
    if n < 1:
        raise InputError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(int(seed))
    a = rng.uniform(1.0, 1.2, n)
    l = np.maximum(rng.uniform(0.0, 20.0, n), _L_FLOOR)
    delta = rng.uniform(10.0, 11.0, n)
    c = rng.uniform(0.0, 1.0, n)
    u = l + delta
    b = float(a @ (l + delta / 4.0))
    M = np.tril(rng.uniform(0.0, 0.0025, (n, n)))
    return MeanVarianceInstance(n=n, a=a, c=c, l=l, u=u, b=b,
                                kappa=int(math.floor(0.8 * n)), M=M)


def _tight_mask(n: int, tightened) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    for i in tightened:
        if not 0 <= int(i) < n:
            raise InputError(f"tightened index {i} out of range")
        mask[int(i)] = True
    return mask


def _interior_y(x, z, u, tight):
    y_lo = np.where(tight, x * x / z, x * x)
    y_hi = u**2 * z
    return 0.5 * (y_lo + y_hi)


def _knapsack_start(inst: KnapsackInstance, tight) -> np.ndarray | None:
    """Strictly interior start, or None when no interior point exists."""
    a, l, u, b = inst.a, inst.l, inst.u, inst.b
    if a @ u <= b * (1.0 + 1e-12):
        return None
    mid = (l + u) / 2.0
    zbar = b / float(a @ mid)
    for zc, shift in ((max(0.5, min(0.995, 1.05 * zbar + 0.02)), 0.5),
                      (0.995, 0.75), (0.999, 0.95)):
        z = np.full(inst.n, zc)
        x = z * (l + shift * (u - l))
        if a @ x > b * (1.0 + 1e-10):
            y = _interior_y(x, z, u, tight)
            return np.concatenate([x, y, z])
    return None


def solve_relaxation(inst: KnapsackInstance, tightened, tol: float = 1e-6) -> SolveResult:
    """Solve the continuous knapsack relaxation with the given tightened set.

    Returns the barrier optimum with KKT residual at most tol and objective
    within tol of the exact relaxation value.
    """
    if tol <= 0.0:
        raise InputError("tol must be positive")
    tight = _tight_mask(inst.n, tightened)
    w0 = _knapsack_start(inst, tight)
    if w0 is None:
        return SolveResult(math.inf, math.inf, 0, SolveStatus.INFEASIBLE)
    model = KnapsackModel(inst.a, inst.f, inst.c, inst.l, inst.u, inst.b, tight)
    res = solve_barrier(model, w0, tol)
    n = inst.n
    return SolveResult(
        objective=res.objective,
        kkt_residual=res.kkt_residual,
        iterations=res.iterations,
        status=SolveStatus.OPTIMAL if res.converged else SolveStatus.MAX_ITER,
        x=res.w[:n], y=res.w[n:2 * n], z=res.w[2 * n:],
    )


def _meanvar_start(inst: MeanVarianceInstance, tight) -> np.ndarray | None:
    a, l, u, b, kappa = inst.a, inst.l, inst.u, inst.b, inst.kappa
    n = inst.n
    if kappa < 1:
        return None
    mid = (l + u) / 2.0
    contrib = a * mid
    order = np.argsort(-contrib, kind="stable")
    top = a * u
    if np.sort(top)[::-1][:kappa].sum() <= b * (1.0 + 1e-12):
        return None
    for z_floor in (min(0.15 * kappa / n, 0.15), 0.02 * kappa / n):
        z = np.full(n, z_floor)
        total = float(contrib @ z)
        for i in order:
            if total > 1.03 * b:
                break
            total += (0.97 - z[i]) * contrib[i]
            z[i] = 0.97
        if total <= b * (1.0 + 1e-10) or z.sum() >= 0.995 * kappa:
            continue
        x = z * mid
        y = _interior_y(x, z, u, tight)
        qx = inst.M @ (inst.M.T @ x)
        v = float(x @ qx) + max(1.0, 0.5 * float(x @ qx))
        return np.concatenate([x, y, z, [v]])
    return None


def solve_meanvar(inst: MeanVarianceInstance, tightened, tol: float = 1e-6) -> SolveResult:
    """Solve the mean-variance relaxation with the given tightened set."""
    if tol <= 0.0:
        raise InputError("tol must be positive")
    tight = _tight_mask(inst.n, tightened)
    w0 = _meanvar_start(inst, tight)
    if w0 is None:
        return SolveResult(math.inf, math.inf, 0, SolveStatus.INFEASIBLE)
    model = MeanVarModel(inst.a, inst.c, inst.l, inst.u, inst.b,
                         inst.kappa, inst.M, tight)
    res = solve_barrier(model, w0, tol)
    n = inst.n
    return SolveResult(
        objective=res.objective,
        kkt_residual=res.kkt_residual,
        iterations=res.iterations,
        status=SolveStatus.OPTIMAL if res.converged else SolveStatus.MAX_ITER,
        x=res.w[:n], y=res.w[n:2 * n], z=res.w[2 * n:3 * n], v=float(res.w[-1]),
    )


def run_budget_sweep(inst, strategies: list[RankingStrategy], steps: int = 15,
                     tol: float = 1e-6, p: float = 2.0) -> list[SweepRow]:
    """Solve the relaxation at budgets j/steps for each ranking strategy.

    At each budget the top floor(n*j/steps) variables under the strategy get
    the perspective tightening.  Works for both instance types.
    """
    if steps < 2:
        raise InputError(f"need steps >= 2, got {steps}")
    is_meanvar = isinstance(inst, MeanVarianceInstance)
    profiles = [profile(bp, p, index=i) for i, bp in enumerate(inst.bound_pairs())]
    rows = []
    for strategy in strategies:
        for j in range(steps + 1):
            fraction = j / steps
            chosen = rank(profiles, strategy, fraction)
            start = time.perf_counter()
            if is_meanvar:
                res = solve_meanvar(inst, chosen, tol)
            else:
                res = solve_relaxation(inst, chosen, tol)
            rows.append(SweepRow(
                strategy=strategy.label(),
                fraction=fraction,
                objective=res.objective,
                kkt_residual=res.kkt_residual,
                seconds=time.perf_counter() - start,
            ))
    return rows


def sweep_to_csv(rows: list[SweepRow], stream) -> None:
    """Write sweep rows as CSV with the fixed header
    strategy,fraction,objective,kkt_residual,seconds."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["strategy", "fraction", "objective", "kkt_residual", "seconds"])
    for row in rows:
        writer.writerow([
            row.strategy,
            format(row.fraction, ".17g"),
            format(row.objective, ".17g"),
            format(row.kkt_residual, ".17g"),
            format(row.seconds, ".6f"),
        ])
