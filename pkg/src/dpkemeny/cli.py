"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 size guard violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiment import ALGORITHM_MODELS, ExperimentConfig, aggregate, write_results
from .local import write_transcript
from .lowerbound import random_checks
from .profiles import mallows_sample, near_tie_profile, random_ranking, uniform_profile
from .rankers import BASES
from .ranking import GuardViolation, build_weights, format_profile_csv, opt_bruteforce, parse_profile_csv

EXIT_INPUT = 2
EXIT_GUARD = 3
MAX_COUNTEREXAMPLES = 10


def _read_profile(path: str):
    return parse_profile_csv(Path(path).read_text(encoding="utf-8"))


def _fmt_order(ranking) -> str:
    return ",".join(map(str, ranking.order))


def cmd_aggregate(args) -> int:
    model = ALGORITHM_MODELS.get(args.algorithm)
    if model != args.model:
        raise ValueError(f"algorithm {args.algorithm!r} belongs to model {model!r}, not {args.model!r}")
    profile = _read_profile(args.input)
    transcript = [] if args.transcript else None
    res = aggregate(profile, args.algorithm, args.epsilon, args.delta, args.mechanism, args.base,
                    args.budget_constant, args.seed, transcript=transcript)
    print(f"ranking: {_fmt_order(res.ranking)}")
    print(f"cost: {res.cost!r}")
    if model != "none":
        print(f"queries_used: {res.queries_used}")
        print(f"fallback_used: {str(res.fallback_used).lower()}")
    if transcript is not None:
        with open(args.transcript, "w", encoding="utf-8") as fh:
            write_transcript(transcript, fh)
    return 0


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.model == "uniform":
        profile = uniform_profile(args.m, args.n, rng)
    else:
        center = random_ranking(args.m, rng)
        if args.model == "mallows":
            profile = mallows_sample(center, args.phi, args.n, rng)
        else:
            profile = near_tie_profile(center, args.n, args.lead, rng)
    Path(args.output).write_text(format_profile_csv(profile), encoding="utf-8")
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.load(args.config)
    write_results(config, args.output)
    return 0


def cmd_oracle(args) -> int:
    profile = _read_profile(args.input)
    res = opt_bruteforce(build_weights(profile))
    print(f"ranking: {_fmt_order(res.ranking)}")
    print(f"opt: {res.cost!r}")
    return 0


def cmd_lowerbound(args) -> int:
    if args.d < 1 or args.t < 1 or args.n < 1 or args.trials < 0:
        raise ValueError("d, t, n must be >= 1 and trials >= 0")
    rng = np.random.default_rng(args.seed)
    totals: dict[str, list[int]] = {}
    shown = 0
    for kind, inst, sigma, check in random_checks(args.d, args.t, args.n, args.trials, rng):
        tally = totals.setdefault(kind, [0, 0])
        tally[0] += 1
        if not check.holds:
            tally[1] += 1
            if shown < MAX_COUNTEREXAMPLES:
                shown += 1
                rec = {"counterexample": kind, "x_vectors": [list(x) for x in inst.x_vectors],
                       "sigma_order": list(sigma.order), **check.as_dict()}
                print(json.dumps(rec, sort_keys=True))
    for kind, (checked, bad) in totals.items():
        print(json.dumps({"check": kind, "d": args.d, "t": args.t, "n": args.n,
                          "checked": checked, "violations": bad, "pass": bad == 0}, sort_keys=True))
    all_ok = all(bad == 0 for _, bad in totals.values())
    print(json.dumps({"summary": True, "pass": all_ok}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpkemeny", description="Differentially private Kemeny rank aggregation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="aggregate a ranking-profile CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--model", choices=["central", "local", "none"], required=True)
    p.add_argument("--algorithm", choices=sorted(ALGORITHM_MODELS), required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--mechanism", choices=["laplace", "gaussian"])
    p.add_argument("--budget-constant", type=float)
    p.add_argument("--base", choices=BASES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transcript", help="write the adaptive local query log here (ldpkwiksort)")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("gen", help="generate a synthetic profile")
    p.add_argument("--model", choices=["mallows", "uniform", "near-tie"], required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--phi", type=float, default=0.8)
    p.add_argument("--lead", type=int, default=2, help="near-tie: extra voters for the center ranking")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("experiment", help="run a sweep from a JSON or TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="override the config's output path")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("oracle", help="exact Kemeny ranking (m <= 10)")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("lowerbound-check", help="randomized checks of the sign-embedding bounds")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_lowerbound)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GuardViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
