import io
import json
import math

import numpy as np
import pytest

from dpkemeny.local import (AdaptiveLocalAnswerer, RRConfig, UserPopulation, adaptive_query, ldp_kwiksort,
                            local_full_matrix, local_full_matrix_raw, randomized_response,
                            reduce_local_noise_all, write_transcript)
from dpkemeny.profiles import uniform_profile
from dpkemeny.rankers import ExactOracle, kwiksort
from dpkemeny.ranking import RankingProfile, as_profile, build_weights, opt_bruteforce

from conftest import AccessLoggingPopulation, unanimous


# -- randomized response --------------------------------------------------

def test_rr_formulas():
    rr = RRConfig(math.log(3))
    assert rr.d_eps == pytest.approx(2.0)
    assert rr.p_plus(1.0) == pytest.approx(0.75)
    assert rr.p_plus(0.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        RRConfig(0)


@pytest.mark.parametrize("eps0", [1e-3, 0.1, 1.0, 5.0, 30.0])
def test_rr_probabilities_valid(eps0):
    rr = RRConfig(eps0)
    vals = np.linspace(-1, 1, 41)
    p = rr.p_plus(vals)
    assert np.all((p >= 0) & (p <= 1))
    # reports are +-d with mean d(2p - 1) == value
    assert np.allclose(rr.d_eps * (2 * p - 1), vals)


def test_rr_rejects_out_of_range(rng):
    with pytest.raises(ValueError):
        randomized_response(1.5, RRConfig(1.0), rng)


@pytest.mark.parametrize("value", [0.0, 1.0, -0.4])
def test_rr_unbiased(rng, value):
    rr = RRConfig(1.0)
    out = randomized_response(np.full(10**5, value), rr, rng)
    assert set(np.unique(out)) <= {rr.d_eps, -rr.d_eps}
    se = out.std() / math.sqrt(out.size)
    assert abs(out.mean() - value) <= 3 * se


# -- full-matrix mechanism -------------------------------------------------

def test_full_matrix_sample_all_is_exact(worked):
    w = build_weights(worked)
    wt = local_full_matrix(worked, 1.0, np.random.default_rng(0), noise_free=True, sample_all=True)
    assert np.allclose(wt.w, w.w)
    with pytest.raises(ValueError):
        local_full_matrix(worked, 1.0, np.random.default_rng(0), sample_all=True)


def test_noise_free_reports_are_the_sampled_bits(rng):
    prof = uniform_profile(4, 300, rng)
    pop = UserPopulation(prof)
    coords, reports = pop.report_random_coordinate(1.0, rng, noise_free=True)
    truth = pop.report_all_coordinates()
    assert np.array_equal(reports, truth[np.arange(300), coords])


def test_full_matrix_large_n_unanimous():
    prof = unanimous([2, 0, 1], 10**6)
    w = build_weights(prof)
    wt = local_full_matrix(prof, 2.0, np.random.default_rng(3))
    assert np.max(np.abs(wt.w - w.w)) <= 0.02


def test_full_matrix_raw_unbiased():
    # w[0, 1] = 2/3
    prof = as_profile([[0, 1, 2], [0, 2, 1], [1, 0, 2]] * (10**5 // 3) + [[0, 1, 2]])
    truth = build_weights(prof)[0, 1]
    pop = UserPopulation(prof)
    rng = np.random.default_rng(8)
    est = np.array([local_full_matrix_raw(pop, 1.0, rng)[0, 1] for _ in range(200)])
    assert abs(est.mean() - truth) <= 3 * est.std(ddof=1) / math.sqrt(est.size)


def test_local_noise_all_noise_free_matches_oracle(worked):
    res = reduce_local_noise_all(worked, 1.0, noise_free=True, sample_all=True)
    assert res.ranking == opt_bruteforce(build_weights(worked)).ranking


def test_local_noise_all_unanimous_accuracy():
    prof = unanimous([3, 1, 4, 0, 2], 64000)
    costs = [reduce_local_noise_all(prof, 2.0, seed=s).cost for s in range(40)]
    assert np.mean(costs) <= 0.1 * 10


def test_local_noise_all_charges_each_user_once(rng):
    prof = uniform_profile(5, 500, rng)
    res = reduce_local_noise_all(prof, 1.5, seed=1)
    assert res.audit["max_reports_full"] == 1
    assert res.audit["max_epsilon_spent"] == pytest.approx(1.5)


# -- adaptive answerer ------------------------------------------------------

def _answerer(prof, eps=1.0, q=None, seed=0, **kw):
    m = prof.m
    q = q or math.ceil(10 * m * math.log(m) * 1.01)
    return AdaptiveLocalAnswerer(UserPopulation(prof), eps, q, np.random.default_rng(seed), **kw)


def test_adaptive_requires_large_q(rng):
    prof = uniform_profile(5, 50, rng)
    with pytest.raises(ValueError):
        AdaptiveLocalAnswerer(UserPopulation(prof), 1.0, 80, rng)
    with pytest.raises(ValueError):
        _answerer(prof).query(2, 2)


def test_adaptive_partition_is_balanced(rng):
    prof = uniform_profile(5, 103, rng)
    ans = _answerer(prof)
    sizes = [len(g) for g in ans.members]
    group = -(-103 // 5)
    dummies = 5 * group - 103
    assert sum(sizes) == 103
    assert all(group - dummies <= s <= group for s in sizes)
    assert sorted(np.concatenate(ans.members).tolist()) == list(range(103))


def test_adaptive_parameters(rng):
    prof = uniform_profile(5, 100, rng)
    ans = _answerer(prof, eps=2.0, q=90)
    assert ans.cap == 36
    assert ans.rr.epsilon0 == pytest.approx(0.5 * 2.0 * 5 / 90)
    # the cap times the per-report budget never exceeds epsilon
    assert ans.cap * ans.rr.epsilon0 <= 2.0 + 1e-12


def test_first_query_never_refused(rng):
    prof = uniform_profile(6, 60, rng)
    for s in range(50):
        assert _answerer(prof, seed=s).query(0, 1) is not None


def test_counter_and_refusal(rng):
    prof = uniform_profile(5, 100, rng)
    ans = _answerer(prof, q=81)
    j, i = 0, 1
    g = ans.ell[j, i]
    answers = [adaptive_query(ans, j, i) for _ in range(ans.cap + 3)]
    assert all(a is not None for a in answers[:ans.cap])
    assert answers[ans.cap:] == [None, None, None]
    assert ans.counters[g] == ans.cap + 3
    # refused queries consume no privacy
    counts = ans.population.ledger["adaptive"]
    assert counts.max() == ans.cap


def test_answers_do_not_depend_on_query_order(rng):
    prof = uniform_profile(6, 400, rng)
    pairs = [(j, i) for j in range(6) for i in range(6) if j != i]
    a, b = _answerer(prof, seed=11), _answerer(prof, seed=11)
    fwd = {p: a.query(*p) for p in pairs}
    rev = {p: b.query(*p) for p in reversed(pairs)}
    assert fwd == rev


def test_adaptive_noise_free_exact(worked):
    prof = as_profile([list(o) for o in [[0, 1, 2, 3, 4]] * 30])
    ans = _answerer(prof, noise_free=True)
    assert ans.query(0, 3) == 1.0 and ans.query(3, 0) == 0.0


def test_adaptive_unbiased_unanimous():
    prof = unanimous([0, 1, 2, 3, 4], 10**5)
    pop = UserPopulation(prof)
    q = math.ceil(10 * 5 * math.log(5) * 1.01)
    est = np.array([AdaptiveLocalAnswerer(pop, 4.0, q, np.random.default_rng([5, r])).query(1, 3)
                    for r in range(500)])
    assert abs(est.mean() - 1.0) <= 3 * est.std(ddof=1) / math.sqrt(est.size)


def test_transcript(rng):
    prof = uniform_profile(5, 100, rng)
    log = []
    ans = _answerer(prof, q=81, transcript=log)
    for _ in range(ans.cap + 1):
        ans.query(0, 1)
    assert len(log) == ans.cap + 1
    assert log[0]["counter_value"] == 1 and log[-1]["estimate"] is None
    buf = io.StringIO()
    write_transcript(log, buf)
    lines = buf.getvalue().splitlines()
    assert json.loads(lines[-1]) == {"counter_value": ans.cap + 1, "estimate": None,
                                     "pair": [0, 1], "partition": int(ans.ell[0, 1])}


# -- LDP KwikSort -----------------------------------------------------------

def test_ldp_kwiksort_noise_free_matches_kwiksort(rng):
    prof = uniform_profile(6, 200, rng)
    for seed in range(10):
        res = ldp_kwiksort(prof, 1.0, seed=seed, noise_free=True)
        pivot_ss = np.random.SeedSequence(seed).spawn(3)[0]
        expected = kwiksort(ExactOracle(build_weights(prof)), 6, np.random.default_rng(pivot_ss))
        assert res.ranking == expected and not res.fallback_used


def test_ldp_kwiksort_fallback_rate():
    rng = np.random.default_rng(12)
    prof = uniform_profile(8, 10**4, rng)
    pop = UserPopulation(prof)
    fallbacks = sum(ldp_kwiksort(prof, 2.0, 10.0, seed=s, population=pop).fallback_used
                    for s in range(1000))
    assert fallbacks / 1000 <= 0.05


def test_ldp_kwiksort_falls_back_on_refusal(rng, monkeypatch):
    prof = uniform_profile(5, 300, rng)
    monkeypatch.setattr(AdaptiveLocalAnswerer, "query", lambda self, j, i: None)
    res = ldp_kwiksort(prof, 1.0, seed=1)
    assert res.fallback_used
    assert res.audit["max_reports_full"] == 1
    assert res.budget_split == ((0.5, 0.0), (0.5, 0.0))


def test_ldp_kwiksort_budget_audit(rng):
    prof = uniform_profile(6, 600, rng)
    res = ldp_kwiksort(prof, 2.0, seed=4)
    assert res.budget_split == ((1.0, 0.0), (1.0, 0.0))
    assert res.audit["max_reports_adaptive"] <= res.audit["cap"]
    assert res.audit["max_epsilon_spent"] <= 2.0 + 1e-9


def test_no_raw_reads_outside_report_methods(rng):
    prof = uniform_profile(6, 800, rng)
    for run in (lambda pop: ldp_kwiksort(prof, 2.0, seed=3, population=pop),
                lambda pop: reduce_local_noise_all(prof, 2.0, seed=3, population=pop)):
        pop = AccessLoggingPopulation(prof)
        run(pop)
        assert pop.readers
        assert set(pop.readers) <= {"report_pair", "report_random_coordinate"}
