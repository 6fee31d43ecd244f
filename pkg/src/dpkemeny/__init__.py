"""Differentially private Kemeny rank aggregation in the central and local models."""

__version__ = "0.1.0"

from .ranking import (
    AggregationResult,
    GuardViolation,
    PairwiseWeights,
    Ranking,
    RankingProfile,
    build_weights,
    kemeny_cost,
    kendall_tau,
    opt_bruteforce,
    opt_value,
)
from .rankers import borda, kwiksort, query_budget
from .central import PrivacyBudget, dp_kwiksort, reduce_noise_all
from .local import ldp_kwiksort, reduce_local_noise_all

__all__ = [
    "AggregationResult",
    "GuardViolation",
    "PairwiseWeights",
    "PrivacyBudget",
    "Ranking",
    "RankingProfile",
    "borda",
    "build_weights",
    "dp_kwiksort",
    "kemeny_cost",
    "kendall_tau",
    "kwiksort",
    "ldp_kwiksort",
    "opt_bruteforce",
    "opt_value",
    "query_budget",
    "reduce_local_noise_all",
    "reduce_noise_all",
]
