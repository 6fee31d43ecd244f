"""Synthetic ranking profiles."""

from __future__ import annotations

import numpy as np

from .ranking import Ranking, RankingProfile


def uniform_profile(m: int, n: int, rng: np.random.Generator) -> RankingProfile:
    """``n`` independent uniformly random rankings (Fisher-Yates per row)."""
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")
    orders = rng.permuted(np.tile(np.arange(m), (n, 1)), axis=1)
    return RankingProfile(np.argsort(orders, axis=1))


def mallows_sample(center: Ranking, phi: float, n: int, rng: np.random.Generator) -> RankingProfile:
    """``n`` i.i.d. Mallows draws, ``P(pi)`` proportional to ``phi ** K(pi, center)``.

    Repeated insertion: the k-th item of ``center`` (0-based) is inserted into
    the current list of ``k`` items with ``r`` items after it, where
    ``P(r) ∝ phi ** r`` for ``r`` in ``0..k``.
    """
    if not 0 < phi <= 1:
        raise ValueError(f"phi must lie in (0, 1], got {phi}")
    if n < 1:
        raise ValueError("need n >= 1")
    m = center.m
    cent = center.order
    # pos[:, k] is the current slot of the k-th center item
    pos = np.zeros((n, m), dtype=np.int64)
    for k in range(1, m):
        probs = phi ** np.arange(k + 1, dtype=float)
        cdf = np.cumsum(probs / probs.sum())
        r = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), k)
        slot = k - r
        head = pos[:, :k]
        head += head >= slot[:, None]
        pos[:, k] = slot
    out = np.empty_like(pos)
    out[:, list(cent)] = pos
    return RankingProfile(out)


def near_tie_profile(center: Ranking, n: int, lead: int, rng: np.random.Generator) -> RankingProfile:
    """Voters split between ``center`` and its reversal, ``center`` ahead by ``lead``.

    Every pair then has majority margin ``lead / (2n)`` in the direction of
    ``center``, which makes the majority order (and the Kemeny optimum) equal
    to ``center``. Rows are shuffled.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    lead = max(0, min(int(lead), n))
    if (n + lead) % 2:
        lead += 1 if lead < n else -1
    n_center = (n + lead) // 2
    rows = np.empty((n, center.m), dtype=np.int64)
    rows[:n_center] = center.positions
    rows[n_center:] = center.reversed().positions
    return RankingProfile(rows[rng.permutation(n)])


def random_ranking(m: int, rng: np.random.Generator) -> Ranking:
    return Ranking(tuple(rng.permutation(m).tolist()))
