"""Rankings, the Kendall tau metric and Kemeny costs.

A ranking over ``m`` items is stored as a position array: ``positions[j]`` is
the 0-based rank of item ``j`` and a lower rank means a stronger preference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

MAX_BRUTEFORCE_M = 10
MAX_SUBSET_DP_M = 18

# Costs within this distance of the minimum count as ties in the exhaustive scan.
_TIE_TOL = 1e-9


class GuardViolation(Exception):
    """Raised when an exact routine is asked to run beyond its size guard."""


@dataclass(frozen=True)
class Ranking:
    """A permutation of ``m`` items in position-array form."""

    positions: tuple[int, ...]

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        if not pos:
            raise ValueError("a ranking needs at least one item")
        if sorted(pos) != list(range(len(pos))):
            raise ValueError(f"positions {pos} are not a permutation of 0..{len(pos) - 1}")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def from_order(cls, order: Iterable[int]) -> "Ranking":
        """Build a ranking from items listed most-preferred first."""
        order = [int(x) for x in order]
        m = len(order)
        if sorted(order) != list(range(m)):
            raise ValueError(f"order {order} is not a permutation of 0..{m - 1}")
        pos = [0] * m
        for rank, item in enumerate(order):
            pos[item] = rank
        return cls(tuple(pos))

    @classmethod
    def identity(cls, m: int) -> "Ranking":
        return cls(tuple(range(m)))

    @property
    def m(self) -> int:
        return len(self.positions)

    @property
    def order(self) -> tuple[int, ...]:
        """Items listed most-preferred first."""
        out = [0] * self.m
        for item, rank in enumerate(self.positions):
            out[rank] = item
        return tuple(out)

    def reversed(self) -> "Ranking":
        m = self.m
        return Ranking(tuple(m - 1 - p for p in self.positions))

    def prefers(self, i: int, j: int) -> bool:
        """True when item ``i`` is ranked before item ``j``."""
        return self.positions[i] < self.positions[j]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=np.int64)


class RankingProfile:
    """The multiset of voters' rankings, all over the same ``m`` items.

    Backed by an ``(n, m)`` array of position arrays so that large simulated
    populations stay cheap; :attr:`rankings` materialises ``Ranking`` objects.
    """

    __slots__ = ("_pos",)

    def __init__(self, rankings: Iterable[Ranking] | np.ndarray):
        if isinstance(rankings, np.ndarray):
            pos = np.array(rankings, dtype=np.int64)
            if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
                raise ValueError(f"position matrix must be (n>=1, m>=1), got {pos.shape}")
            if not np.array_equal(np.sort(pos, axis=1), np.broadcast_to(np.arange(pos.shape[1]), pos.shape)):
                raise ValueError("every row must be a permutation of 0..m-1")
        else:
            rankings = list(rankings)
            if not rankings:
                raise ValueError("a profile needs at least one ranking")
            m = rankings[0].m
            for r in rankings:
                if r.m != m:
                    raise ValueError(f"profile mixes rankings of size {m} and {r.m}")
            pos = np.array([r.positions for r in rankings], dtype=np.int64)
        pos.setflags(write=False)
        self._pos = pos

    @classmethod
    def from_positions(cls, positions: np.ndarray) -> "RankingProfile":
        return cls(np.asarray(positions))

    @property
    def m(self) -> int:
        return self._pos.shape[1]

    @property
    def n(self) -> int:
        return self._pos.shape[0]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        return isinstance(other, RankingProfile) and np.array_equal(self._pos, other._pos)

    def __repr__(self):
        return f"RankingProfile(n={self.n}, m={self.m})"

    @property
    def rankings(self) -> tuple[Ranking, ...]:
        return tuple(Ranking(tuple(row)) for row in self._pos.tolist())

    def positions_matrix(self) -> np.ndarray:
        """Read-only ``(n, m)`` integer array of position arrays."""
        return self._pos


@dataclass(frozen=True, eq=False)
class PairwiseWeights:
    """Pairwise preference fractions ``w[i, j]`` = share preferring ``i`` over ``j``.

    Off-diagonal entries lie in ``[0, 1]`` and satisfy ``w[i, j] + w[j, i] = 1``;
    the diagonal is zero and never read.
    """

    w: np.ndarray
    tol: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise ValueError(f"weights must be a square matrix, got shape {w.shape}")
        np.fill_diagonal(w, 0.0)
        off = ~np.eye(w.shape[0], dtype=bool)
        if np.any(w[off] < -self.tol) or np.any(w[off] > 1 + self.tol):
            raise ValueError("weights must lie in [0, 1]")
        if np.any(np.abs((w + w.T)[off] - 1.0) > self.tol):
            raise ValueError("weights violate w[i, j] + w[j, i] = 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def m(self) -> int:
        return self.w.shape[0]

    def __getitem__(self, key):
        return self.w[key]

    @classmethod
    def from_upper(cls, m: int, upper: dict[tuple[int, int], float]) -> "PairwiseWeights":
        """Fill ``w[i, j]`` for ``i < j`` from ``upper`` and complete by complement."""
        w = np.zeros((m, m))
        for (i, j), v in upper.items():
            if not i < j:
                raise ValueError(f"upper-triangle keys need i < j, got {(i, j)}")
            w[i, j] = v
            w[j, i] = 1.0 - v
        return cls(w)


@dataclass(frozen=True)
class AggregationResult:
    """Output of an aggregation run.

    ``cost`` is the Kemeny score of ``ranking`` against the true weights.
    ``budget_split`` lists the ``(epsilon, delta)`` allocated to each private
    sub-mechanism of the run; ``audit`` carries bookkeeping (noised pair
    counts, per-user response counts) for structural privacy checks.
    """

    ranking: Ranking
    cost: float
    queries_used: int = 0
    fallback_used: bool = False
    seed: int | None = None
    budget_split: tuple[tuple[float, float], ...] = ()
    audit: dict = field(default_factory=dict, compare=False, repr=False)


def _check_same_m(a: int, b: int) -> None:
    if a != b:
        raise ValueError(f"dimension mismatch: {a} items vs {b} items")


def kendall_tau(a: Ranking, b: Ranking) -> int:
    """Number of item pairs ordered one way by ``a`` and the other by ``b``."""
    _check_same_m(a.m, b.m)
    pa, pb = a.as_array(), b.as_array()
    a_before = pa[:, None] < pa[None, :]
    b_after = pb[:, None] > pb[None, :]
    return int(np.count_nonzero(a_before & b_after))


def build_weights(profile: RankingProfile) -> PairwiseWeights:
    """Fraction of voters ranking ``i`` before ``j``, for every ordered pair."""
    pos = profile.positions_matrix()
    counts = np.zeros((profile.m, profile.m), dtype=np.int64)
    for start in range(0, pos.shape[0], 8192):
        block = pos[start:start + 8192]
        counts += np.count_nonzero(block[:, :, None] < block[:, None, :], axis=0)
    return PairwiseWeights(counts / profile.n)


def kemeny_cost(sigma: Ranking, w: PairwiseWeights) -> float:
    """Average Kendall tau distance of ``sigma`` expressed through the weights.

    Each ordered pair with ``sigma`` placing ``i`` before ``j`` contributes the
    share ``w[j, i]`` of voters who disagree.
    """
    _check_same_m(sigma.m, w.m)
    p = sigma.as_array()
    before = p[:, None] < p[None, :]
    return float(np.sum(w.w.T[before]))


@lru_cache(maxsize=None)
def _lex_permutations(m: int) -> np.ndarray:
    """All position arrays of size ``m`` in lexicographic order."""
    if m == 1:
        out = np.zeros((1, 1), dtype=np.int8)
    else:
        sub = _lex_permutations(m - 1)
        blocks = []
        for first in range(m):
            rest = np.array([x for x in range(m) if x != first], dtype=np.int8)
            block = np.empty((sub.shape[0], m), dtype=np.int8)
            block[:, 0] = first
            block[:, 1:] = rest[sub]
            blocks.append(block)
        out = np.concatenate(blocks)
    out.setflags(write=False)
    return out


def opt_bruteforce(w: PairwiseWeights) -> AggregationResult:
    """Exact Kemeny ranking by scanning all ``m!`` permutations.

    Among minimisers the lexicographically smallest position array wins.

    Raises:
        GuardViolation: if ``w.m`` exceeds ``MAX_BRUTEFORCE_M``.
    """
    m = w.m
    if m > MAX_BRUTEFORCE_M:
        raise GuardViolation(f"exhaustive search refused for m={m} > {MAX_BRUTEFORCE_M}")
    perms = _lex_permutations(m)
    costs = np.zeros(perms.shape[0])
    # chunked to keep the temporaries small at m = 10
    step = math.factorial(m - 1) if m > 1 else 1
    ww = w.w
    for start in range(0, perms.shape[0], step):
        chunk = perms[start:start + step]
        acc = costs[start:start + step]
        for i in range(m):
            for j in range(i + 1, m):
                acc += np.where(chunk[:, i] < chunk[:, j], ww[j, i], ww[i, j])
    best = costs.min()
    idx = int(np.flatnonzero(costs <= best + _TIE_TOL)[0])
    sigma = Ranking(tuple(perms[idx].tolist()))
    return AggregationResult(sigma, kemeny_cost(sigma, w))


def opt_value(w: PairwiseWeights) -> float:
    """Minimum Kemeny cost by dynamic programming over item subsets.

    Runs in ``O(2^m m)`` and serves as a fast second route to the value that
    :func:`opt_bruteforce` finds by enumeration.
    """
    m = w.m
    if m > MAX_SUBSET_DP_M:
        raise GuardViolation(f"subset DP refused for m={m} > {MAX_SUBSET_DP_M}")
    size = 1 << m
    # placed_before[x][S] = sum_{i in S} w[x, i]: cost of appending x after set S
    placed_before = np.empty((m, size))
    for x in range(m):
        acc = np.zeros(1)
        for b in range(m):
            acc = np.concatenate([acc, acc + w.w[x, b]])
        placed_before[x] = acc
    rows = placed_before.tolist()
    best = [math.inf] * size
    best[0] = 0.0
    for mask in range(size):
        cur = best[mask]
        for x in range(m):
            bit = 1 << x
            if mask & bit:
                continue
            cand = cur + rows[x][mask]
            if cand < best[mask | bit]:
                best[mask | bit] = cand
    return float(best[size - 1])


def max_distance(m: int) -> int:
    return m * (m - 1) // 2


def parse_profile_csv(text: str) -> RankingProfile:
    """Parse the profile CSV format: one voter per row, most-preferred item first.

    An optional ``# m=<m>`` header fixes the item count; other ``#`` lines and
    blank lines are skipped.
    """
    declared_m = None
    rankings = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip().replace(" ", "")
            if body.startswith("m="):
                try:
                    declared_m = int(body[2:])
                except ValueError:
                    raise ValueError(f"line {lineno}: bad header {raw!r}") from None
            continue
        try:
            order = [int(tok) for tok in line.split(",")]
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer item id in {raw!r}") from None
        m = declared_m if declared_m is not None else len(order)
        if len(order) != m or sorted(order) != list(range(m)):
            raise ValueError(f"line {lineno}: row is not a permutation of 0..{m - 1}")
        rankings.append(Ranking.from_order(order))
    if not rankings:
        raise ValueError("profile file contains no rankings")
    return RankingProfile(rankings)


def format_profile_csv(profile: RankingProfile) -> str:
    lines = [f"# m={profile.m}"]
    orders = np.argsort(profile.positions_matrix(), axis=1)
    lines += [",".join(map(str, row)) for row in orders.tolist()]
    return "\n".join(lines) + "\n"


def as_profile(rankings: Sequence[Sequence[int]]) -> RankingProfile:
    """Profile from preference orders (most-preferred first)."""
    return RankingProfile([Ranking.from_order(o) for o in rankings])
