"""Ranking indicator variables by how much the perspective tightening buys.

Each variable carries the exact volume gap between its naive and perspective
bodies; ranking by that gap (or by the cube-root variant) tells a modeler
which variables deserve the conic treatment.  Rank correlations quantify how
interchangeable the two measures are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from .errors import DomainError, InputError
from .functions import BoundPair
from .volumes import Cap, vol_diff, vol_power_family

__all__ = [
    "VariableProfile",
    "RankingKind",
    "RankingStrategy",
    "profile",
    "rank",
    "kendall_tau",
    "spearman_rho",
]


@dataclass(frozen=True)
class VariableProfile:
    """Per-variable tightening diagnostics for cost x**p on [lo, hi]."""

    index: int
    bounds: BoundPair
    p: float
    vol_gap: float      # vol(naive) - vol(perspective), both secant-capped
    root_gap: float     # cube-root difference of the same two volumes
    width: float        # hi - lo


class RankingKind(Enum):
    DESCENDING_VOL_DIFF = "descending"
    ASCENDING_VOL_DIFF = "ascending"
    RANDOM = "random"
    DESCENDING_ROOT_DIFF = "root-descending"


@dataclass(frozen=True)
class RankingStrategy:
    kind: RankingKind
    seed: int | None = None

    def __post_init__(self):
        if self.kind is RankingKind.RANDOM and self.seed is None:
            raise InputError("random ranking needs a seed")

    def label(self) -> str:
        if self.kind is RankingKind.RANDOM:
            return f"random:{self.seed}"
        return self.kind.value

    @staticmethod
    def parse(text: str, default_seed: int = 0) -> "RankingStrategy":
        text = text.strip()
        if text.startswith("random"):
            _, _, tail = text.partition(":")
            seed = int(tail) if tail else default_seed
            return RankingStrategy(RankingKind.RANDOM, seed)
        for kind in RankingKind:
            if kind.value == text:
                return RankingStrategy(kind)
        raise InputError(f"unknown ranking strategy {text!r}")


def profile(bounds: BoundPair, p: float, index: int = 0) -> VariableProfile:
    """Exact tightening diagnostics for one variable.

    vol_gap uses the closed form (p-1)(hi**(p+1) - lo**(p+1)) /
    (3(p+1)(p+2)), which is (hi^3 - lo^3)/36 at p = 2.
    """
    if not p > 1.0:
        raise DomainError(f"need p > 1, got {p}")
    gap = vol_diff(p, 0.0, p - 1.0, bounds)
    naive = vol_power_family(p, 0.0, bounds, Cap.SECANT).value
    persp = vol_power_family(p, p - 1.0, bounds, Cap.SECANT).value
    return VariableProfile(
        index=index,
        bounds=bounds,
        p=p,
        vol_gap=gap,
        root_gap=naive ** (1.0 / 3.0) - persp ** (1.0 / 3.0),
        width=bounds.width,
    )


def rank(profiles: list[VariableProfile], strategy: RankingStrategy,
         budget_fraction: float) -> list[int]:
    """Indices of the floor(n * budget_fraction) variables to tighten.

    Deterministic: score ties break by ascending index, and the random
    strategy is a seeded permutation.
    """
    if not 0.0 <= budget_fraction <= 1.0:
        raise InputError(f"budget fraction must be in [0,1], got {budget_fraction}")
    n = len(profiles)
    count = min(n, math.floor(n * budget_fraction + 1e-9))
    if count == 0:
        return []
    if strategy.kind is RankingKind.RANDOM:
        rng = np.random.Generator(np.random.Philox(key=np.uint64(strategy.seed)))
        order = [profiles[i].index for i in rng.permutation(n)]
        return order[:count]
    if strategy.kind is RankingKind.DESCENDING_VOL_DIFF:
        key = lambda pr: (-pr.vol_gap, pr.index)
    elif strategy.kind is RankingKind.ASCENDING_VOL_DIFF:
        key = lambda pr: (pr.vol_gap, pr.index)
    else:
        key = lambda pr: (-pr.root_gap, pr.index)
    return [pr.index for pr in sorted(profiles, key=key)][:count]


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.size != b.size:
        raise InputError("inputs must be equal-length 1-d sequences")
    if a.size < 2:
        raise InputError("need at least two observations")
    return a, b


def kendall_tau(a, b) -> float:
    """Tie-adjusted Kendall rank correlation (tau-b), O(n log n)."""
    a, b = _check_pair(a, b)
    return float(stats.kendalltau(a, b, variant="b").statistic)


def spearman_rho(a, b) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks."""
    a, b = _check_pair(a, b)
    return float(stats.spearmanr(a, b).statistic)
