"""Embedding of sign vectors into rankings, and checks of the marginal bounds.

A vector ``x`` in ``{-1, +1}^d`` maps to a ranking of ``2d + t`` items: the
middle block of ``t`` items stays in place and the outer item pair
``(j, j + d + t)`` swaps places exactly when ``x_j = -1``. Items here are
0-based (outer pair ``(a, a + d + t)`` for ``a`` in ``0..d-1``); the 1-based
indexing of the construction is shifted by one in :func:`embed_pi` only.

All bound checks use integer and ``Fraction`` arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ranking import Ranking, kendall_tau


def _check_signs(x: Sequence[int], d: int) -> list[int]:
    x = [int(v) for v in x]
    if len(x) != d:
        raise ValueError(f"sign vector has length {len(x)}, expected d={d}")
    if any(v not in (-1, 1) for v in x):
        raise ValueError("sign vector entries must be -1 or +1")
    return x


def embed_pi(x: Sequence[int], d: int, t: int) -> Ranking:
    """Identity on ``2d + t`` items with outer pair ``a``/``a+d+t`` swapped where ``x[a] == -1``."""
    if d < 1 or t < 1:
        raise ValueError("d and t must be >= 1")
    x = _check_signs(x, d)
    pos = list(range(2 * d + t))
    for a, xa in enumerate(x):
        if xa == -1:
            pos[a], pos[a + d + t] = a + d + t, a
    return Ranking(tuple(pos))


def recover_rho(sigma: Ranking, d: int, t: int) -> list[int]:
    """``-1`` where ``sigma`` ranks item ``a`` before ``a + d + t``, else ``+1``.

    Note ``recover_rho(embed_pi(x)) == -x``; :func:`decode_signs` is the
    inverse of :func:`embed_pi`.
    """
    if sigma.m != 2 * d + t:
        raise ValueError(f"ranking has {sigma.m} items, expected 2d+t={2 * d + t}")
    p = sigma.positions
    return [-1 if p[a] < p[a + d + t] else 1 for a in range(d)]


def decode_signs(sigma: Ranking, d: int, t: int) -> list[int]:
    """Sign vector read off ``sigma`` so that ``decode_signs(embed_pi(x)) == x``."""
    return [-v for v in recover_rho(sigma, d, t)]


@dataclass(frozen=True)
class MarginalInstance:
    d: int
    t: int
    x_vectors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.d < 1 or self.t < 1:
            raise ValueError("d and t must be >= 1")
        if not self.x_vectors:
            raise ValueError("need at least one sign vector")
        xs = tuple(tuple(_check_signs(x, self.d)) for x in self.x_vectors)
        object.__setattr__(self, "x_vectors", xs)

    @property
    def n(self) -> int:
        return len(self.x_vectors)

    @property
    def size(self) -> int:
        return 2 * self.d + self.t

    def rankings(self) -> list[Ranking]:
        return [embed_pi(x, self.d, self.t) for x in self.x_vectors]

    def mean_inner(self, v: Sequence[int]) -> Fraction:
        """``<v, (1/n) sum_i x^i>`` exactly."""
        total = sum(sum(a * b for a, b in zip(v, x)) for x in self.x_vectors)
        return Fraction(total, self.n)

    def avg_kendall(self, sigma: Ranking) -> Fraction:
        return Fraction(sum(kendall_tau(sigma, r) for r in self.rankings()), self.n)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: Fraction
    rhs: Fraction
    holds: bool

    def as_dict(self) -> dict:
        return {"bound": self.name, "lhs": str(self.lhs), "rhs": str(self.rhs), "holds": self.holds}


def check_lower(instance: MarginalInstance, sigma: Ranking) -> BoundCheck:
    """Average distance to the embedded profile is at least ``t`` per wrong sign.

    Checks ``Kbar(sigma) >= t (d/2 - <s, xbar>/2)`` with ``s`` the signs
    decoded from ``sigma``.
    """
    if sigma.m != instance.size:
        raise ValueError(f"ranking has {sigma.m} items, expected {instance.size}")
    d, t = instance.d, instance.t
    lhs = instance.avg_kendall(sigma)
    rhs = t * (Fraction(d, 2) - instance.mean_inner(decode_signs(sigma, d, t)) / 2)
    return BoundCheck("lower", lhs, rhs, lhs >= rhs)


def check_upper(instance: MarginalInstance, y: Sequence[int]) -> BoundCheck:
    """``Kbar(embed_pi(y)) <= t (d/2 - <y, xbar>/2) + 2 d^2``."""
    d, t = instance.d, instance.t
    y = _check_signs(y, d)
    lhs = instance.avg_kendall(embed_pi(y, d, t))
    rhs = t * (Fraction(d, 2) - instance.mean_inner(y) / 2) + 2 * d * d
    return BoundCheck("upper", lhs, rhs, lhs <= rhs)


def check_bounds(instance: MarginalInstance, sigma: Ranking,
                       y: Sequence[int] | None = None) -> list[BoundCheck]:
    """Both bound checks; the upper one needs the vector ``y`` behind ``sigma``."""
    out = [check_lower(instance, sigma)]
    if y is not None:
        if embed_pi(y, instance.d, instance.t) != sigma:
            raise ValueError("sigma must equal embed_pi(y) for the upper bound")
        out.append(check_upper(instance, y))
    return out


def random_signs(rng: np.random.Generator, n: int, d: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(v) for v in row) for row in rng.choice([-1, 1], size=(n, d)))


def random_checks(d: int, t: int, n: int, trials: int, rng: np.random.Generator):
    """Yield ``(kind, instance, sigma, check)`` for randomized bound checks.

    Each trial draws fresh sign vectors and tests the lower bound on a
    uniform ranking and on an embedded ranking, plus the upper bound on a
    random ``y``.
    """
    m = 2 * d + t
    for _ in range(trials):
        inst = MarginalInstance(d, t, random_signs(rng, n, d))
        sigma = Ranking(tuple(rng.permutation(m).tolist()))
        yield "lower_uniform", inst, sigma, check_lower(inst, sigma)
        y = random_signs(rng, 1, d)[0]
        sigma_y = embed_pi(y, d, t)
        yield "lower_embedded", inst, sigma_y, check_lower(inst, sigma_y)
        yield "upper", inst, sigma_y, check_upper(inst, y)
