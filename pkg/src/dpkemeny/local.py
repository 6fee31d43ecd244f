"""Local-model private aggregation over a simulated user population.

Users keep their rankings inside :class:`UserPopulation`; the aggregator only
ever sees randomized-response reports. Every report is charged to the
reporting user in a per-mechanism ledger so that privacy spending can be
audited after a run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from .rankers import default_base, kwiksort, query_budget, run_base
from .ranking import AggregationResult, PairwiseWeights, Ranking, RankingProfile, build_weights, kemeny_cost

DEFAULT_LOCAL_BUDGET_CONSTANT = 10.0


@dataclass(frozen=True)
class RRConfig:
    """Randomized response with per-application budget ``epsilon0``."""

    epsilon0: float

    def __post_init__(self):
        if not self.epsilon0 > 0:
            raise ValueError(f"epsilon0 must be positive, got {self.epsilon0}")

    @property
    def d_eps(self) -> float:
        # (e^x + 1)/(e^x - 1) == 1/tanh(x/2), stable for small x
        return 1.0 / math.tanh(self.epsilon0 / 2.0)

    def p_plus(self, value):
        """Probability of reporting ``+d_eps`` for a private value in ``[-1, 1]``."""
        return 0.5 * (1.0 + np.asarray(value, dtype=float) / self.d_eps)


def randomized_response(value, rr: RRConfig, rng: np.random.Generator):
    """Unbiased two-point report of ``value``: ``+d_eps`` or ``-d_eps``.

    ``value`` may be a scalar or an array with entries in ``[-1, 1]``; the
    report has expectation equal to ``value`` and is ``epsilon0``-DP over that
    whole range.
    """
    v = np.asarray(value, dtype=float)
    if np.any(np.abs(v) > 1):
        raise ValueError("randomized response input must lie in [-1, 1]")
    d = rr.d_eps
    out = np.where(rng.random(v.shape) < rr.p_plus(v), d, -d)
    return float(out) if out.ndim == 0 else out


class UserPopulation:
    """In-process stand-in for ``n`` users holding private rankings.

    The only ways to learn anything about the rankings are the ``report_*``
    methods, each of which charges the reporting users in :attr:`ledger`.
    """

    def __init__(self, profile: RankingProfile):
        self.__positions = profile.positions_matrix()
        self.n = profile.n
        self.m = profile.m
        # mechanism tag -> per-user count of randomized-response applications
        self.ledger: dict[str, np.ndarray] = {}
        self.epsilon_spent = np.zeros(self.n)

    @property
    def _positions(self) -> np.ndarray:
        return self.__positions

    def _charge(self, tag: str, users, epsilon: float) -> None:
        counts = self.ledger.setdefault(tag, np.zeros(self.n, dtype=np.int64))
        counts[users] += 1
        self.epsilon_spent[users] += epsilon

    def _bits(self, users, j: int, i: int) -> np.ndarray:
        pos = self._positions
        return (pos[users, j] < pos[users, i]).astype(float)

    def report_pair(self, users: np.ndarray, j: int, i: int, rr: RRConfig,
                    rng: np.random.Generator, tag: str = "adaptive") -> np.ndarray:
        """Each listed user privatizes ``1[ranks j before i]`` once."""
        bits = self._bits(users, j, i)
        self._charge(tag, users, rr.epsilon0)
        return randomized_response(bits, rr, rng)

    def report_exact_pair(self, j: int, i: int) -> float:
        """Non-private fraction ranking ``j`` before ``i`` (testing hook only)."""
        return float(self._bits(slice(None), j, i).mean())

    def report_random_coordinate(self, epsilon: float, rng: np.random.Generator,
                                 noise_free: bool = False, tag: str = "full"):
        """Each user reports one uniformly chosen ordered pair through RR.

        Returns ``(coordinate index, report)`` arrays of length ``n``; the
        coordinate indexes the ordered pairs ``(j, i)``, ``j != i``, in
        row-major order.
        """
        m = self.m
        d = m * (m - 1)
        coords = rng.integers(d, size=self.n)
        js, is_ = _ordered_pairs(m)
        j, i = js[coords], is_[coords]
        pos = self._positions
        users = np.arange(self.n)
        bits = (pos[users, j] < pos[users, i]).astype(float)
        self._charge(tag, users, 0.0 if noise_free else epsilon)
        reports = bits if noise_free else randomized_response(bits, RRConfig(epsilon), rng)
        return coords, reports

    def report_all_coordinates(self) -> np.ndarray:
        """Every user's full indicator vector, unprivatized (testing hook only)."""
        js, is_ = _ordered_pairs(self.m)
        pos = self._positions
        return (pos[:, js] < pos[:, is_]).astype(float)


def _ordered_pairs(m: int) -> tuple[np.ndarray, np.ndarray]:
    js, is_ = np.nonzero(~np.eye(m, dtype=bool))
    return js, is_


def _complete(raw: np.ndarray) -> PairwiseWeights:
    """Symmetrize a raw ordered-pair estimate, clip to [0, 1], complement."""
    m = raw.shape[0]
    wt = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            v = min(1.0, max(0.0, 0.5 * (raw[i, j] + 1.0 - raw[j, i])))
            wt[i, j], wt[j, i] = v, 1.0 - v
    return PairwiseWeights(wt)


def local_full_matrix_raw(population: UserPopulation, epsilon: float, rng: np.random.Generator,
                          noise_free: bool = False, sample_all: bool = False) -> np.ndarray:
    """Unbiased, unclipped estimate of every ``w[j, i]`` from one report per user.

    Each user samples one of the ``m(m-1)`` ordered pairs, randomizes its bit
    with ``epsilon``-RR and the aggregator rescales by the number of pairs.
    ``sample_all`` (only with ``noise_free``) makes every user report every
    pair, which recovers the true matrix exactly.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    m, n = population.m, population.n
    raw = np.zeros((m, m))
    js, is_ = _ordered_pairs(m)
    if sample_all:
        if not noise_free:
            raise ValueError("sample_all is a noise-free testing hook")
        raw[js, is_] = population.report_all_coordinates().mean(axis=0)
        return raw
    d = m * (m - 1)
    coords, reports = population.report_random_coordinate(epsilon, rng, noise_free)
    sums = np.bincount(coords, weights=reports, minlength=d)
    raw[js, is_] = d * sums / n
    return raw


def local_full_matrix(population: UserPopulation | RankingProfile, epsilon: float,
                      rng: np.random.Generator, noise_free: bool = False,
                      sample_all: bool = False) -> PairwiseWeights:
    """``epsilon``-local-DP estimate of the full weight matrix."""
    if isinstance(population, RankingProfile):
        population = UserPopulation(population)
    return _complete(local_full_matrix_raw(population, epsilon, rng, noise_free, sample_all))


class AdaptiveLocalAnswerer:
    """Interactive local answerer with a random balanced user partition.

    Users are split into ``m`` equal groups (padding with silent dummy slots
    when ``m`` does not divide ``n``). Each ordered pair ``(j, i)`` is bound to
    a uniformly random group for the whole run; a query asks every member of
    that group for one ``epsilon0``-RR report, ``epsilon0 = epsilon*m/(2q)``.
    A group may answer at most ``cap = floor(2q/m)`` queries, so no user spends
    more than ``epsilon``; beyond that the query returns ``None``.
    """

    def __init__(self, population: UserPopulation, epsilon: float, q: int,
                 rng: np.random.Generator, noise_free: bool = False,
                 transcript: list | None = None):
        m, n = population.m, population.n
        if m < 2:
            raise ValueError("the adaptive answerer needs m >= 2")
        if not q > 10 * m * math.log(m):
            raise ValueError(f"q={q} must exceed 10 m ln m = {10 * m * math.log(m):.2f}")
        if not epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.population = population
        self.m, self.n, self.q = m, n, q
        self.epsilon = epsilon
        self.rr = RRConfig(0.5 * epsilon * m / q)
        self.cap = (2 * q) // m
        self.noise_free = noise_free
        self.transcript = transcript

        part_rng, ell_rng = rng.spawn(2)
        self._rr_entropy = rng.integers(2**63)
        padded = -(-n // m) * m
        slots = part_rng.permutation(padded)
        group_size = padded // m
        # slot s belongs to group s // group_size; dummy slots (>= n) stay silent
        self.assignment = np.empty(padded, dtype=np.int64)
        self.assignment[slots] = np.arange(padded) // group_size
        self.members = [np.sort(g[g < n]) for g in slots.reshape(m, group_size)]
        self.ell = ell_rng.integers(m, size=(m, m))
        self.counters = np.zeros(m, dtype=np.int64)
        self.queries = 0

    def _pair_rng(self, j: int, i: int) -> np.random.Generator:
        # per-pair stream: answers do not depend on query order
        return np.random.default_rng([int(self._rr_entropy), j, i])

    def query(self, j: int, i: int) -> float | None:
        """Estimate of ``w[j, i]``, or ``None`` when the bound group is spent."""
        if j == i:
            raise ValueError("query needs two distinct items")
        g = int(self.ell[j, i])
        self.counters[g] += 1
        self.queries += 1
        if self.counters[g] > self.cap:
            self._log(j, i, g, None)
            return None
        if self.noise_free:
            est = self.population.report_exact_pair(j, i)
        else:
            users = self.members[g]
            reports = self.population.report_pair(users, j, i, self.rr, self._pair_rng(j, i))
            est = self.m / self.n * float(np.sum(reports))
        self._log(j, i, g, est)
        return est

    def _log(self, j, i, g, est):
        if self.transcript is not None:
            self.transcript.append({"pair": [j, i], "partition": g,
                                    "counter_value": int(self.counters[g]), "estimate": est})


def adaptive_query(answerer: AdaptiveLocalAnswerer, j: int, i: int) -> float | None:
    return answerer.query(j, i)


def write_transcript(records: list[dict], fh: IO[str]) -> None:
    """One JSON object per line; a refused query has ``"estimate": null``."""
    for rec in records:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _spawn(seed, k):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(k)


def reduce_local_noise_all(profile: RankingProfile, epsilon: float, base: str = "exact",
                           seed=0, noise_free: bool = False, sample_all: bool = False,
                           population: UserPopulation | None = None) -> AggregationResult:
    """One ``epsilon``-RR report per user, then ``base`` on the estimated matrix."""
    noise_ss, base_ss = _spawn(seed, 2)
    population = population or UserPopulation(profile)
    m = profile.m
    if m == 1:
        return AggregationResult(Ranking.identity(1), 0.0, 0, False, _seed_int(seed), ((epsilon, 0.0),))
    wt = local_full_matrix(population, epsilon, np.random.default_rng(noise_ss), noise_free, sample_all)
    sigma = run_base(base, wt, np.random.default_rng(base_ss))
    audit = _ledger_audit(population)
    audit["base"] = base
    return AggregationResult(sigma, kemeny_cost(sigma, build_weights(profile)), 0, False,
                             _seed_int(seed), ((epsilon, 0.0),), audit)


def ldp_kwiksort(profile: RankingProfile, epsilon: float,
                 constant: float = DEFAULT_LOCAL_BUDGET_CONSTANT, seed=0,
                 noise_free: bool = False, transcript: list | None = None,
                 population: UserPopulation | None = None) -> AggregationResult:
    """KwikSort against the adaptive local answerer, falling back on refusal.

    The answerer gets ``epsilon/2`` and ``q = query_budget(m, constant)``; the
    first refused query abandons the run and the other ``epsilon/2`` pays for
    :func:`reduce_local_noise_all`.
    """
    pivot_ss, ans_ss, fallback_ss = _spawn(seed, 3)
    population = population or UserPopulation(profile)
    m = profile.m
    split = ((epsilon / 2, 0.0), (epsilon / 2, 0.0))
    if m == 1:
        return AggregationResult(Ranking.identity(1), 0.0, 0, False, _seed_int(seed), split)
    q = query_budget(m, constant)
    ans = AdaptiveLocalAnswerer(population, epsilon / 2, q, np.random.default_rng(ans_ss),
                                noise_free=noise_free, transcript=transcript)
    sigma = kwiksort(ans, m, np.random.default_rng(pivot_ss))
    fallback = sigma is None
    if fallback:
        fb = reduce_local_noise_all(profile, epsilon / 2, default_base(m), fallback_ss,
                                    noise_free=noise_free, population=population)
        sigma = fb.ranking
    audit = _ledger_audit(population)
    audit.update({"cap": ans.cap, "query_limit": q, "epsilon0": ans.rr.epsilon0})
    return AggregationResult(sigma, kemeny_cost(sigma, build_weights(profile)), ans.queries,
                             fallback, _seed_int(seed), split, audit)


def _ledger_audit(population: UserPopulation) -> dict:
    audit = {f"max_reports_{tag}": int(c.max()) for tag, c in population.ledger.items()}
    audit["max_epsilon_spent"] = float(population.epsilon_spent.max())
    return audit


def _seed_int(seed) -> int | None:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return None
