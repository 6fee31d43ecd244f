"""Non-private aggregation: KwikSort over a weight oracle, Borda, exact search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Protocol

import numpy as np

from .ranking import PairwiseWeights, Ranking, opt_bruteforce, MAX_BRUTEFORCE_M

BASES = ("exact", "kwiksort", "borda")
DEFAULT_BUDGET_CONSTANT = 8.0


class WeightOracle(Protocol):
    """Query access to (possibly noisy) pairwise weights.

    ``query(i, j)`` reveals the estimate of ``w[i, j]`` or returns ``None``
    once the oracle refuses to answer (query budget exhausted).
    """

    def query(self, i: int, j: int) -> float | None: ...


@dataclass
class QueryCounter:
    """Counts answered queries against an optional limit."""

    limit: int | None = None
    used: int = 0

    def charge(self) -> bool:
        """Reserve one query; False (and no change) when the limit is reached."""
        if self.limit is not None and self.used >= self.limit:
            return False
        self.used += 1
        return True


class ExactOracle:
    """Answers queries straight from a weight matrix, optionally budgeted."""

    def __init__(self, w: PairwiseWeights, limit: int | None = None):
        self._w = w.w.tolist()
        self.counter = QueryCounter(limit)

    def query(self, i: int, j: int) -> float | None:
        if not self.counter.charge():
            return None
        return self._w[i][j]


def kwiksort_order(oracle: WeightOracle, items: Iterable[int],
                   rng: np.random.Generator) -> list[int] | None:
    """QuickSort-style aggregation of ``items``; returns them most-preferred first.

    A uniformly random pivot ``p`` splits the remaining items: ``j`` goes left
    iff ``oracle.query(j, p) > 0.5``. Sub-problems are solved left first, so
    the query sequence is a deterministic function of the seed and the answers.
    Returns ``None`` as soon as the oracle refuses a query.
    """
    out: list[int] = []
    # LIFO work list: a list entry is a sub-problem, an int is a pivot to emit
    stack: list = [list(items)]
    while stack:
        task = stack.pop()
        if isinstance(task, int):
            out.append(task)
            continue
        if not task:
            continue
        if len(task) == 1:
            out.append(task[0])
            continue
        pivot = task[int(rng.integers(len(task)))]
        left, right = [], []
        for j in task:
            if j == pivot:
                continue
            v = oracle.query(j, pivot)
            if v is None:
                return None
            # exact ties go right
            (left if v > 0.5 else right).append(j)
        stack.append(right)
        stack.append(pivot)
        stack.append(left)
    return out


def kwiksort(oracle: WeightOracle, m: int, rng: np.random.Generator) -> Ranking | None:
    """KwikSort over all ``m`` items; ``None`` when the oracle fails."""
    order = kwiksort_order(oracle, range(m), rng)
    return None if order is None else Ranking.from_order(order)


def borda(w: PairwiseWeights) -> Ranking:
    """Sort items by descending row sum of ``w``; ties go to the smaller id."""
    scores = np.round(w.w.sum(axis=1), 12)
    order = sorted(range(w.m), key=lambda i: (-scores[i], i))
    return Ranking.from_order(order)


def query_budget(m: int, constant: float) -> int:
    """``ceil(constant * m * ln m)`` comparisons allowed to KwikSort."""
    if m < 2:
        raise ValueError(f"query budget needs m >= 2, got {m}")
    if constant <= 0:
        raise ValueError(f"budget constant must be positive, got {constant}")
    return math.ceil(constant * m * math.log(m))


def run_base(base: str, w: PairwiseWeights, rng: np.random.Generator) -> Ranking:
    """Run a non-private base ranker on a full weight matrix."""
    if base == "exact":
        return opt_bruteforce(w).ranking
    if base == "kwiksort":
        return kwiksort(ExactOracle(w), w.m, rng)
    if base == "borda":
        return borda(w)
    raise ValueError(f"unknown base ranker {base!r}; expected one of {BASES}")


def default_base(m: int) -> str:
    """Exact search where it is affordable, KwikSort beyond."""
    return "exact" if m <= MAX_BRUTEFORCE_M else "kwiksort"
