from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy import stats

from folner.diagnostics import KS_99_R2000, replicate_seeds
from folner.entropy import (
    PartitionProcess,
    empirical_entropy,
    entropy_clt_check,
    entropy_eta_sq,
    entropy_eta_sq_truncated,
    entropy_values,
    interval_sequence,
    mixing_certificate,
    rho_m,
    site_log_probs,
)
from folner.processes import make_iid_categorical, make_markov_chain

SEQ = interval_sequence()
BERNOULLI = PartitionProcess(make_iid_categorical([0.7, 0.3]))
STAY_09 = PartitionProcess(make_markov_chain([[0.9, 0.1], [0.1, 0.9]]))
SKEWED = PartitionProcess(make_markov_chain([[0.1, 0.6, 0.3], [0.5, 0.2, 0.3], [0.2, 0.2, 0.6]]))
H_03 = -(0.3 * math.log(0.3) + 0.7 * math.log(0.7))


def _within_4se(values, target):
    se = values.std(ddof=1) / math.sqrt(len(values))
    return abs(values.mean() - target) < 4 * se


def test_uniform_source_is_exactly_log_k():
    for k in (2, 3, 5):
        proc = PartitionProcess(make_iid_categorical([1 / k] * k))
        vals = entropy_values(proc, SEQ, 64, replicate_seeds(1, 20))
        assert np.allclose(vals, math.log(k), rtol=0, atol=1e-13)
        assert np.ptp(vals) <= 1e-13


def test_bernoulli_mean_matches_binary_entropy():
    assert math.isclose(H_03, 0.610864, abs_tol=5e-7)
    vals = entropy_values(BERNOULLI, SEQ, 10_000, replicate_seeds(2, 500))
    assert _within_4se(vals, H_03)
    assert (vals >= 0).all()


def test_markov_mean_matches_entropy_rate():
    rate = -(0.9 * math.log(0.9) + 0.1 * math.log(0.1))
    assert math.isclose(STAY_09.entropy_rate, rate, rel_tol=1e-14)
    vals = entropy_values(STAY_09, SEQ, 10_000, replicate_seeds(3, 500))
    assert _within_4se(vals, rate)


def test_bernoulli_eta_sq_closed_form():
    expected = 0.3 * math.log(0.3) ** 2 + 0.7 * math.log(0.7) ** 2 - H_03**2
    assert math.isclose(entropy_eta_sq(BERNOULLI.source), expected, rel_tol=1e-12)
    assert abs(expected - 0.150762) < 5e-7


def test_markov_eta_sq_matches_truncated_sum():
    for proc in (STAY_09, SKEWED):
        closed = entropy_eta_sq(proc.source)
        assert math.isclose(entropy_eta_sq_truncated(proc.source, 400), closed, rel_tol=1e-10)


def test_bernoulli_clt_passes():
    res = entropy_clt_check(BERNOULLI, [4096], 2000, base_seed=4, threshold=KS_99_R2000)
    assert res.status == "PASS"
    assert res.reports[0].extra["entropy_rate_oracle"] == BERNOULLI.entropy_rate


def test_uniform_clt_skips():
    res = entropy_clt_check(PartitionProcess(make_iid_categorical([1 / 3] * 3)), [256], 200, threshold=KS_99_R2000)
    assert res.status == "SKIP" and "degenerate" in res.flag


def test_chain_rule_identity():
    for proc in (STAY_09, SKEWED):
        path = proc.source.sample_interval(1, 12, [9, 10, 11])
        terms = site_log_probs(proc, path)
        for row, logp in zip(path, terms):
            joint = proc.source.joint_prob({t + 1: int(s) for t, s in enumerate(row)})
            assert abs(math.fsum(logp) - math.log(joint)) < 1e-10


def test_estimate_matches_log_probability():
    est = empirical_entropy(SKEWED, SEQ, 50, seed=6)
    assert math.isclose(est.h_n, -est.log_prob / 50, rel_tol=1e-15)
    assert est.h_n >= 0


def test_median_error_decreases():
    seeds = replicate_seeds(7, 200)
    errors = [np.median(np.abs(entropy_values(BERNOULLI, SEQ, 2**p, seeds) - H_03)) for p in (8, 10, 12, 14)]
    assert all(b < a for a, b in zip(errors, errors[1:]))


@pytest.mark.parametrize("perm", list(itertools.permutations(range(3))))
def test_relabeling_invariance(perm):
    P = SKEWED.source.transition
    inv = np.argsort(perm)
    relabeled = make_markov_chain(P[np.ix_(inv, inv)])
    path = SKEWED.source.sample_interval(1, 200, [12, 13])
    mapped = np.asarray(perm)[path]
    a = site_log_probs(SKEWED, path).sum(axis=1)
    b = site_log_probs(PartitionProcess(relabeled), mapped).sum(axis=1)
    assert np.array_equal(a, b)


def test_rho_examples():
    assert rho_m(STAY_09, 1).value == 0.0 and rho_m(STAY_09, 1).certified_zero
    assert rho_m(BERNOULLI, 0).value == 0.0
    order2 = np.array([[0.9, 0.1], [0.3, 0.7], [0.6, 0.4], [0.2, 0.8]])
    proc2 = PartitionProcess(make_markov_chain(order2, order=2))
    assert rho_m(proc2, 1, horizon=3).value > 0.0
    assert rho_m(proc2, 2, horizon=3).value == 0.0
    assert rho_m(proc2, 1, horizon=1).lower_bound_only


def test_mixing_certificate_for_positive_chain():
    cert = mixing_certificate(STAY_09)
    assert cert.finite and cert.ratio_at_horizon < 1 and math.isfinite(cert.partial_sum)
    assert cert.witness_m == 1


def test_order_of_chain_rule_does_not_change_ensembles():
    seeds = replicate_seeds(8, 2000)
    natural = entropy_values(SKEWED, SEQ, 256, seeds)
    backward = entropy_values(SKEWED, SEQ, 256, seeds, order="reversed")
    assert np.max(np.abs(natural - backward)) < 1e-12
    other = entropy_values(SKEWED, SEQ, 256, replicate_seeds(9, 2000), order="reversed")
    assert stats.ks_2samp(natural, other).pvalue > 0.01
