"""Experiment sweeps: synthetic profiles through every aggregation algorithm.

Rows follow a fixed CSV header; every random choice is derived from the
master seed and the (grid point, trial) indices, so a configuration always
reproduces the same file byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterator

import numpy as np

from .central import PrivacyBudget, dp_kwiksort, reduce_noise_all
from .local import DEFAULT_LOCAL_BUDGET_CONSTANT, ldp_kwiksort, reduce_local_noise_all
from .profiles import mallows_sample, near_tie_profile, random_ranking, uniform_profile
from .rankers import BASES, DEFAULT_BUDGET_CONSTANT, ExactOracle, borda, kwiksort
from .ranking import (MAX_BRUTEFORCE_M, AggregationResult, RankingProfile, build_weights, kemeny_cost,
                      opt_bruteforce, opt_value)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ALGORITHM_MODELS = {
    "exact": "none",
    "kwiksort": "none",
    "borda": "none",
    "noiseall": "central",
    "dpkwiksort": "central",
    "localnoiseall": "local",
    "ldpkwiksort": "local",
}

CSV_HEADER = ("m", "n", "epsilon", "delta", "model", "algorithm", "trial", "cost", "opt",
              "additive_error", "ratio", "queries_used", "fallback_used", "seed")


def aggregate(profile: RankingProfile, algorithm: str, epsilon: float | None = None,
              delta: float = 0.0, mechanism: str | None = None, base: str | None = None,
              budget_constant: float | None = None, seed: int = 0, noise_free: bool = False,
              transcript: list | None = None) -> AggregationResult:
    """Run one named algorithm on a profile."""
    if algorithm not in ALGORITHM_MODELS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    model = ALGORITHM_MODELS[algorithm]
    if base is not None and base not in BASES:
        raise ValueError(f"unknown base ranker {base!r}")
    if model != "none" and (epsilon is None or not epsilon > 0):
        raise ValueError(f"{algorithm} needs a positive epsilon")
    if transcript is not None and algorithm != "ldpkwiksort":
        raise ValueError("transcripts are only produced by ldpkwiksort")
    w = build_weights(profile)
    if algorithm == "exact":
        return opt_bruteforce(w)
    if algorithm == "kwiksort":
        sigma = kwiksort(ExactOracle(w), w.m, np.random.default_rng(seed))
        return AggregationResult(sigma, kemeny_cost(sigma, w), 0, False, seed)
    if algorithm == "borda":
        sigma = borda(w)
        return AggregationResult(sigma, kemeny_cost(sigma, w), 0, False, seed)
    if model == "central":
        if mechanism == "laplace":
            delta = 0.0
        budget = PrivacyBudget(epsilon, delta)
        if algorithm == "noiseall":
            return reduce_noise_all(w, budget, profile.n, base or "exact", seed, mechanism, noise_free)
        constant = DEFAULT_BUDGET_CONSTANT if budget_constant is None else budget_constant
        return dp_kwiksort(w, budget, profile.n, constant, seed, mechanism, noise_free)
    if delta:
        raise ValueError("local algorithms are pure DP; delta must be 0")
    if algorithm == "localnoiseall":
        return reduce_local_noise_all(profile, epsilon, base or "exact", seed, noise_free)
    constant = DEFAULT_LOCAL_BUDGET_CONSTANT if budget_constant is None else budget_constant
    return ldp_kwiksort(profile, epsilon, constant, seed, noise_free, transcript)


@dataclass
class ExperimentConfig:
    """Sweep description; see the README for the JSON/TOML layout.

    ``profile`` selects the synthetic data: ``{"model": "uniform"}``,
    ``{"model": "mallows", "phi": 0.8}`` or ``{"model": "near_tie",
    "lead": 4, "lead_power": 0.0}``; the near-tie lead is
    ``round(lead * n ** lead_power)`` voters.
    """

    m: int
    n_grid: list[int]
    epsilon_grid: list[float]
    algorithms: list[str]
    trials: int = 1
    delta: float = 0.0
    mechanism: str | None = None
    base: str = "exact"
    budget_constant: float | None = None
    master_seed: int = 0
    profile: dict = field(default_factory=lambda: {"model": "uniform"})
    output: str | None = None
    noise_free: bool = False

    def __post_init__(self):
        if isinstance(self.algorithms, str):
            self.algorithms = [self.algorithms]
        if not self.n_grid or not self.epsilon_grid or not self.algorithms:
            raise ValueError("grids and algorithm list must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 1 <= self.m <= MAX_BRUTEFORCE_M:
            raise ValueError(f"experiments report additive error against exact OPT; need 1 <= m <= {MAX_BRUTEFORCE_M}")
        for a in self.algorithms:
            if a not in ALGORITHM_MODELS:
                raise ValueError(f"unknown algorithm {a!r}")
        if any(int(n) < 1 for n in self.n_grid):
            raise ValueError("voter counts must be >= 1")
        if self.profile.get("model") not in ("uniform", "mallows", "near_tie"):
            raise ValueError(f"unknown profile model {self.profile.get('model')!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "algorithm" in data and "algorithms" not in data:
            data["algorithms"] = data.pop("algorithm")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".toml":
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
        return cls.from_dict(data)


@dataclass(frozen=True)
class ResultRow:
    m: int
    n: int
    epsilon: float
    delta: float
    model: str
    algorithm: str
    trial: int
    cost: float
    opt: float
    additive_error: float
    ratio: float | None
    queries_used: int
    fallback_used: bool
    seed: int

    def csv_fields(self) -> list[str]:
        return [str(self.m), str(self.n), repr(float(self.epsilon)), repr(float(self.delta)),
                self.model, self.algorithm, str(self.trial), repr(self.cost), repr(self.opt),
                repr(self.additive_error), "" if self.ratio is None else repr(self.ratio),
                str(self.queries_used), str(self.fallback_used).lower(), str(self.seed)]


def make_profile(profile_cfg: dict, m: int, n: int, rng: np.random.Generator) -> RankingProfile:
    kind = profile_cfg.get("model", "uniform")
    if kind == "uniform":
        return uniform_profile(m, n, rng)
    center = random_ranking(m, rng)
    if kind == "mallows":
        return mallows_sample(center, float(profile_cfg.get("phi", 0.8)), n, rng)
    if kind == "near_tie":
        lead = round(float(profile_cfg.get("lead", 2)) * n ** float(profile_cfg.get("lead_power", 0.0)))
        return near_tie_profile(center, n, lead, rng)
    raise ValueError(f"unknown profile model {kind!r}")


def _seed_of(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def run_experiment(config: ExperimentConfig) -> Iterator[ResultRow]:
    """Yield one row per (n, trial, epsilon, algorithm), in that nesting order.

    The profile for a given (n, trial) is shared across epsilons and
    algorithms so that comparisons are paired.
    """
    for ni, n in enumerate(config.n_grid):
        for trial in range(config.trials):
            prof_ss = np.random.SeedSequence(config.master_seed, spawn_key=(ni, trial))
            profile = make_profile(config.profile, config.m, int(n), np.random.default_rng(prof_ss))
            opt = opt_value(build_weights(profile))
            for ei, eps in enumerate(config.epsilon_grid):
                for ai, alg in enumerate(config.algorithms):
                    ss = np.random.SeedSequence(config.master_seed, spawn_key=(ni, trial, ei, ai, 1))
                    seed = _seed_of(ss)
                    model = ALGORITHM_MODELS[alg]
                    delta = config.delta if model == "central" and config.mechanism != "laplace" else 0.0
                    res = aggregate(profile, alg, float(eps), delta, config.mechanism, config.base,
                                    config.budget_constant, seed, config.noise_free)
                    ratio = res.cost / opt if opt > 0 else None
                    yield ResultRow(config.m, int(n), float(eps), delta, model, alg, trial, res.cost, opt,
                                    res.cost - opt, ratio, res.queries_used, res.fallback_used, seed)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def write_results(config: ExperimentConfig, out: str | Path | None = None) -> list[ResultRow]:
    rows = list(run_experiment(config))
    text = rows_to_csv(rows)
    target = out or config.output
    if target is None:
        sys.stdout.write(text)
    else:
        Path(target).write_text(text)
    return rows


def loglog_slope(ns, errors) -> float:
    """OLS slope of ``log(error)`` against ``log(n)``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def mean_by(rows, key) -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(key(r), []).append(r.additive_error)
    return {k: float(np.mean(v)) for k, v in groups.items()}
