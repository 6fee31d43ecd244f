"""Central-model private aggregation.

A trusted curator holds the true weights and answers ranking-algorithm
queries with Laplace or Gaussian noise. Two reductions are provided:
:func:`reduce_noise_all` noises every pair and runs a base ranker on the
result, while :func:`dp_kwiksort` spends half the budget on the few pairs
KwikSort looks at and keeps the other half for a noise-everything fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rankers import DEFAULT_BUDGET_CONSTANT, QueryCounter, default_base, kwiksort, query_budget, run_base
from .ranking import AggregationResult, PairwiseWeights, Ranking, kemeny_cost

MECHANISMS = ("laplace", "gaussian")


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 <= self.delta < 1:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")

    @property
    def pure(self) -> bool:
        return self.delta == 0


def laplace_scale(epsilon: float, q: int, n: int) -> float:
    """Per-pair Laplace scale: ``q`` answers of sensitivity ``1/n`` share ``epsilon``."""
    return q / (epsilon * n)


def gaussian_sigma(epsilon: float, delta: float, q: int, n: int) -> float:
    """Classical Gaussian-mechanism sigma for ``q`` answers, l2 sensitivity ``sqrt(q)/n``."""
    return math.sqrt(2.0 * q * math.log(1.25 / delta)) / (epsilon * n)


class CentralAnswerer:
    """Curator-side noisy oracle over the true weights.

    Each unordered pair ``{i, j}`` (``i < j``) is noised at most once, clipped
    to ``[0, 1]`` and frozen; the reverse orientation is its complement. Every
    call to :meth:`query` is charged against ``limit`` before anything is
    revealed, and ``None`` is returned once the limit is spent.
    """

    def __init__(self, w: PairwiseWeights, mechanism: str, scale: float,
                 limit: int | None, rng: np.random.Generator):
        if mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {mechanism!r}")
        if scale < 0:
            raise ValueError("noise scale must be nonnegative")
        self._w = w.w
        self.m = w.m
        self.mechanism = mechanism
        self.scale = scale
        self.counter = QueryCounter(limit)
        self._rng = rng
        self._noised: dict[tuple[int, int], float] = {}
        # raw draws before clipping, kept for audits
        self.raw_noise: dict[tuple[int, int], float] = {}

    @property
    def noised_pairs(self) -> int:
        return len(self.raw_noise)

    def _draw(self) -> float:
        if self.scale == 0:
            return 0.0
        if self.mechanism == "laplace":
            return float(self._rng.laplace(0.0, self.scale))
        return float(self._rng.normal(0.0, self.scale))

    def _upper(self, i: int, j: int) -> float:
        key = (i, j)
        v = self._noised.get(key)
        if v is None:
            z = self._draw()
            self.raw_noise[key] = z
            v = min(1.0, max(0.0, self._w[i, j] + z))
            self._noised[key] = v
        return v

    def query(self, i: int, j: int) -> float | None:
        if i == j:
            raise ValueError("query needs two distinct items")
        if not self.counter.charge():
            return None
        return self._upper(i, j) if i < j else 1.0 - self._upper(j, i)

    def materialize(self) -> PairwiseWeights:
        """Reveal every pair (charging one query each) as a weight matrix.

        Raises:
            RuntimeError: if the query limit cannot cover all pairs.
        """
        wt = np.zeros((self.m, self.m))
        for i in range(self.m):
            for j in range(i + 1, self.m):
                v = self.query(i, j)
                if v is None:
                    raise RuntimeError("query limit too small to materialize all pairs")
                wt[i, j], wt[j, i] = v, 1.0 - v
        return PairwiseWeights(wt)


def laplace_answerer(w: PairwiseWeights, budget: PrivacyBudget, q: int, n: int,
                     rng: np.random.Generator, scale: float | None = None) -> CentralAnswerer:
    """``budget.epsilon``-DP answerer for ``q`` queries via Laplace noise.

    ``scale`` overrides the calibrated noise scale (tests use 0).
    """
    if not budget.pure:
        raise ValueError("the Laplace answerer is pure DP; use delta == 0")
    _check_qn(q, n)
    if scale is None:
        scale = laplace_scale(budget.epsilon, q, n)
    return CentralAnswerer(w, "laplace", scale, q, rng)


def gaussian_answerer(w: PairwiseWeights, budget: PrivacyBudget, q: int, n: int,
                      rng: np.random.Generator, scale: float | None = None) -> CentralAnswerer:
    """``(epsilon, delta)``-DP answerer for ``q`` queries via Gaussian noise."""
    if budget.pure:
        raise ValueError("the Gaussian answerer needs delta > 0")
    _check_qn(q, n)
    if scale is None:
        scale = gaussian_sigma(budget.epsilon, budget.delta, q, n)
    return CentralAnswerer(w, "gaussian", scale, q, rng)


def _check_qn(q: int, n: int) -> None:
    if q < 1:
        raise ValueError(f"query limit must be >= 1, got {q}")
    if n < 1:
        raise ValueError(f"voter count must be >= 1, got {n}")


def make_answerer(w, budget, q, n, rng, mechanism=None, noise_free=False) -> CentralAnswerer:
    mechanism = mechanism or ("laplace" if budget.pure else "gaussian")
    factory = laplace_answerer if mechanism == "laplace" else gaussian_answerer
    return factory(w, budget, q, n, rng, scale=0.0 if noise_free else None)


def _seeded(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def reduce_noise_all(w: PairwiseWeights, budget: PrivacyBudget, n: int, base: str = "exact",
                     seed=0, mechanism: str | None = None,
                     noise_free: bool = False) -> AggregationResult:
    """Noise every pair once, run ``base`` on the noisy matrix.

    The answerer covers all ``m(m-1)/2`` unordered pairs, so it never fails.
    The returned cost is measured against the true ``w``.
    """
    ss = _seeded(seed)
    noise_ss, base_ss = ss.spawn(2)
    m = w.m
    if m == 1:
        sigma = Ranking.identity(1)
        return AggregationResult(sigma, 0.0, 0, False, _seed_int(seed), ((budget.epsilon, budget.delta),))
    q = m * (m - 1) // 2
    ans = make_answerer(w, budget, q, n, np.random.default_rng(noise_ss), mechanism, noise_free)
    noisy = ans.materialize()
    sigma = run_base(base, noisy, np.random.default_rng(base_ss))
    audit = {"noised_pairs": ans.noised_pairs, "query_limit": q, "noise_scale": ans.scale,
             "mechanism": ans.mechanism, "base": base}
    return AggregationResult(sigma, kemeny_cost(sigma, w), ans.counter.used, False,
                             _seed_int(seed), ((budget.epsilon, budget.delta),), audit)


def dp_kwiksort(w: PairwiseWeights, budget: PrivacyBudget, n: int,
                constant: float = DEFAULT_BUDGET_CONSTANT, seed=0,
                mechanism: str | None = None, noise_free: bool = False) -> AggregationResult:
    """KwikSort against a budgeted noisy answerer, with a noise-all fallback.

    Half of epsilon (and all of delta) goes to an answerer allowed
    ``query_budget(m, constant)`` queries; if KwikSort needs more, the run is
    discarded and :func:`reduce_noise_all` is run with pure Laplace noise at
    the other half of epsilon. ``budget_split`` records both allocations.
    """
    ss = _seeded(seed)
    pivot_ss, noise_ss, fallback_ss = ss.spawn(3)
    m = w.m
    half = PrivacyBudget(budget.epsilon / 2, budget.delta)
    fallback_budget = PrivacyBudget(budget.epsilon / 2, 0.0)
    split = ((half.epsilon, half.delta), (fallback_budget.epsilon, fallback_budget.delta))
    if m == 1:
        return AggregationResult(Ranking.identity(1), 0.0, 0, False, _seed_int(seed), split)
    q = query_budget(m, constant)
    ans = make_answerer(w, half, q, n, np.random.default_rng(noise_ss), mechanism, noise_free)
    sigma = kwiksort(ans, m, np.random.default_rng(pivot_ss))
    audit = {"noised_pairs": ans.noised_pairs, "query_limit": q, "noise_scale": ans.scale,
             "mechanism": ans.mechanism}
    if sigma is not None:
        return AggregationResult(sigma, kemeny_cost(sigma, w), ans.counter.used, False,
                                 _seed_int(seed), split, audit)
    fb = reduce_noise_all(w, fallback_budget, n, default_base(m), fallback_ss,
                          mechanism="laplace", noise_free=noise_free)
    audit["fallback"] = fb.audit
    return AggregationResult(fb.ranking, fb.cost, ans.counter.used, True, _seed_int(seed), split, audit)


def _seed_int(seed) -> int | None:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if isinstance(seed, np.random.SeedSequence) and isinstance(seed.entropy, int):
        return int(seed.entropy)
    return None
