from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from folner.averaging import SamplingScheme, Statistic, coordinate, pair_product, subgroup_values
from folner.diagnostics import replicate_seeds
from folner.errors import (
    DegenerateVarianceError,
    DivergentTailError,
    MissingMomentError,
    NegativeVarianceError,
    TruncationError,
)
from folner.groups import FolnerSequence, Lattice, boundary_ratio
from folner.processes import MixingOracle, isotropic_kernel, make_ma_field
from folner.variance import (
    _checked,
    be_bound,
    be_bound_h1,
    eta_sq_oracle,
    eta_truncated,
    eta_truncated_values,
    hypothesis_check,
    require_nondegenerate,
    sbm_analytic_variance,
    scheme_eta_sq,
    subgroup_beta_oracle,
    tau_tail,
)

Z1 = FolnerSequence(Lattice(1))
Z2 = FolnerSequence(Lattice(2))
X0 = coordinate(1)
MA1 = make_ma_field(1, 1, {(0,): 1.0, (1,): 1.0})
IID = make_ma_field(1, 0, {(0,): 1.0})


def _within_4se(values, target):
    se = values.std(ddof=1) / math.sqrt(len(values))
    return abs(values.mean() - target) < 4 * se


def test_plugin_iid_single_term():
    vals = eta_truncated_values(X0, IID, Z1, 100, 0, replicate_seeds(1, 2000))
    assert _within_4se(vals, 1.0)


def test_plugin_ma1_recovers_eta_sq():
    vals = eta_truncated_values(X0, MA1, Z1, 200, 2, replicate_seeds(2, 2000))
    assert _within_4se(vals, 4.0)


def test_plugin_under_truncation_bias():
    vals = eta_truncated_values(X0, MA1, Z1, 200, 0, replicate_seeds(2, 2000))
    assert _within_4se(vals, 2.0)


def test_plugin_constant_beyond_twice_order():
    seeds = replicate_seeds(3, 2000)
    base = eta_truncated_values(X0, MA1, Z1, 200, 2, seeds)
    for m in (3, 4, 6):
        diff = eta_truncated_values(X0, MA1, Z1, 200, m, seeds) - base
        assert _within_4se(diff, 0.0)


def test_plugin_translation_consistent():
    field = make_ma_field(2, 1, np.full((3, 3), 1 / 3))
    shifted = Statistic("shifted", lambda v: v[..., 0], offsets=((5, 5),), monomials=((1.0, (0,)),))
    a = eta_truncated_values(coordinate(2), field, Z2, 12, 2, replicate_seeds(4, 400))
    b = eta_truncated_values(shifted, field, Z2, 12, 2, replicate_seeds(5, 400))
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_plugin_errors_and_clamping():
    with pytest.raises(TruncationError):
        eta_truncated(X0, MA1, Z1, 3, 4, seed=1)
    with pytest.raises(NegativeVarianceError):
        _checked(-1e-3, 2, "plugin-truncated")
    est = _checked(-1e-12, 2, "plugin-truncated")
    assert est.eta_sq == 0.0 and est.clamped


def test_tau_tail_m_dependent_is_zero_beyond_radius():
    oracle = MixingOracle("exact_zero", radius=2)
    assert tau_tail(oracle, 2.0, 3, Lattice(1)) == 0.0
    assert tau_tail(oracle, 2.0, 0, Lattice(1)) > 0.0


@pytest.mark.parametrize("rho", [0.3, 0.7, 0.9])
@pytest.mark.parametrize("r", [0, 1, 5])
def test_tau_tail_geometric_closed_form(rho, r):
    got = tau_tail(MixingOracle("geometric", rate=rho), 2.0, r, Lattice(1))
    expected = 2 * rho ** (r / 2) / (1 - math.sqrt(rho))
    assert abs(got - expected) <= 1e-10 * max(expected, 1.0)


def test_tau_tail_monotone():
    oracle = MixingOracle("geometric", rate=0.8)
    vals = [tau_tail(oracle, 1.0, r, Lattice(2)) for r in range(12)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    dep = MixingOracle("exact_zero", radius=4)
    vals = [tau_tail(dep, 1.0, r, Lattice(2)) for r in range(8)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[5:] == [0.0, 0.0, 0.0]


def test_tau_tail_without_information():
    with pytest.raises(DivergentTailError):
        tau_tail(MixingOracle("none"), 1.0, 0, Lattice(1))


def test_hypothesis_regimes():
    bounded = coordinate(1, bounded=True)
    assert hypothesis_check(bounded, MixingOracle("exact_zero", radius=2), Lattice(1)).regime == "H1"
    assert hypothesis_check(bounded, MixingOracle("exact_zero", radius=2), Lattice(1)).witness == 3
    h2 = hypothesis_check(bounded, MixingOracle("geometric", rate=0.9), Lattice(3))
    assert h2.regime == "H2" and h2.certificate["ratio_at_horizon"] < 1
    heavy = Statistic("heavy", lambda v: v[..., 0], offsets=((0,),), moment_order=1.5)
    assert hypothesis_check(heavy, MixingOracle("geometric", rate=0.5), Lattice(1)).regime == "unverifiable"


def test_be_bound_h1_arithmetic():
    bound = be_bound_h1(Z1, 100, 3, 1.2, 1.2)
    expected = 1.728 * 49 / math.sqrt(201) + 1.44 * (6 / 201)
    assert math.isclose(bound.value, expected, rel_tol=1e-12)
    assert boundary_ratio(Z1, 100, 3) == 6 / 201


def test_be_bound_decreasing_and_vanishing():
    vals = [be_bound_h1(Z2, n, 2, 1.1, 1.3).value for n in (4, 8, 16, 32, 64, 128)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < vals[0] / 10


def test_be_bound_h2_reduces_to_h1_shape():
    h2 = be_bound("H2", 201, 7, {3.0: 1.1, 6.0: 1.3}, tau_b=0.0, tau_0=1.0, intersection=1.0, eps=1.0)
    assert h2.terms["tail_term"] == 0.0 and h2.terms["boundary_term"] == 0.0
    assert math.isclose(h2.value, 1.3**3 * 7 / math.sqrt(201))


def test_be_bound_requires_moments():
    with pytest.raises(MissingMomentError):
        be_bound("H1", 100, 3, {2: 1.0}, boundary=0.1)


def test_be_bound_json_round_trip():
    import json

    bound = be_bound_h1(Z1, 50, 1, 1.0, 1.0)
    assert json.loads(bound.to_json())["value"] == bound.value


def test_scheme_variance_formulas():
    assert scheme_eta_sq(4.0, 2.0, 401, SamplingScheme("haar")) == 4.0
    assert scheme_eta_sq(4.0, 2.0, 401, SamplingScheme("poisson", 1.0)) == 6.0
    full = SamplingScheme("without_replacement", 401)
    assert math.isclose(scheme_eta_sq(4.0, 2.0, 401, full), 4.0)


def test_sbm_examples():
    one = sbm_analytic_variance([1.0], [[0.3]])
    assert math.isclose(one.E[0], 0.3**3) and one.eta_sq == 0.0 and one.degenerate
    two = sbm_analytic_variance([0.5, 0.5], [[0.8, 0.2], [0.2, 0.8]])
    assert np.allclose(two.E, [0.152, 0.152], atol=1e-15)
    assert math.isclose(two.eta_sq, 0.011552, rel_tol=1e-12)
    assert math.isclose(two.expected_density, 0.152, rel_tol=1e-12)
    flat = sbm_analytic_variance([0.5, 0.5], [[0.4, 0.4], [0.4, 0.4]])
    assert np.allclose(flat.E, 0.4**3)


def _direct_sbm(pi, P):
    r = len(pi)
    E = [sum(pi[j] * P[i][j] * sum(pi[k] * P[i][k] * P[j][k] for k in range(r)) for j in range(r)) for i in range(r)]
    return E, sum(pi[i] * (1 - pi[i]) * E[i] ** 2 for i in range(r)), sum(pi[i] * E[i] for i in range(r))


@st.composite
def _sbm_params(draw):
    r = draw(st.integers(1, 4))
    weight = st.one_of(st.just(0.0), st.floats(1e-3, 1.0))
    w = draw(st.lists(weight, min_size=r, max_size=r).filter(lambda x: sum(x) > 1e-3))
    pi = [x / sum(w) for x in w]
    if draw(st.booleans()):
        pi = [0.0] * r
        pi[draw(st.integers(0, r - 1))] = 1.0
    upper = draw(st.lists(st.sampled_from([0.0, 0.1, 0.35, 0.5, 0.9, 1.0]), min_size=r * r, max_size=r * r))
    P = [[0.0] * r for _ in range(r)]
    for i in range(r):
        for j in range(i, r):
            P[i][j] = P[j][i] = upper[i * r + j]
    return pi, P


@settings(max_examples=1000, deadline=None)
@given(_sbm_params())
def test_sbm_variance_property(params):
    pi, P = params
    res = sbm_analytic_variance(pi, P)
    E, eta_sq, density = _direct_sbm(pi, P)
    assert np.allclose(res.E, E, atol=1e-14)
    assert math.isclose(res.eta_sq, eta_sq, abs_tol=1e-14)
    assert 0.0 <= res.expected_density <= 1.0 + 1e-12
    assert math.isclose(res.expected_density, density, abs_tol=1e-14)
    zero_expected = all(p in (0.0, 1.0) or e == 0.0 for p, e in zip(pi, E))
    assert (res.eta_sq == 0.0) == zero_expected


def test_degenerate_variance_refused():
    with pytest.raises(DegenerateVarianceError):
        require_nondegenerate(0.0)
    assert require_nondegenerate(4.0) == 2.0


def test_oracle_matches_linear_formula():
    assert math.isclose(eta_sq_oracle(X0, MA1), 4.0)
    field = make_ma_field(2, 1, np.full((3, 3), 1 / 3))
    assert math.isclose(eta_sq_oracle(coordinate(2), field), 9.0)


def test_oracle_pair_product_against_simulation():
    f = pair_product((0,), (1,))
    vals = eta_truncated_values(f, MA1, Z1, 300, 4, replicate_seeds(7, 1500), center=1.0)
    assert _within_4se(vals, eta_sq_oracle(f, MA1))


def test_subgroup_beta_oracle_matches_ensemble():
    iso = make_ma_field(2, 1, isotropic_kernel(1.0, 0.2, -0.5))
    f = pair_product((0, 0), (1, 0))
    oracle = subgroup_beta_oracle(f, iso)
    res = subgroup_values(f, iso, 24, replicate_seeds(3, 1000))
    estimate = res.translation.var(ddof=1) / res.full.var(ddof=1) - 1.0
    assert abs(estimate - oracle.beta_sq_minus_one) < 0.25 * oracle.beta_sq_minus_one
    # the displayed covariance sum and the variance ratio are independent routes to the same number
    ratio_route = oracle.eta_sq_translations / oracle.eta_sq_group - 1.0
    assert math.isclose(ratio_route, oracle.beta_sq_minus_one, rel_tol=1e-9)
