from __future__ import annotations

import math

import numpy as np
import pytest

from folner.averaging import (
    HAAR,
    TRIANGLE,
    SamplingScheme,
    Statistic,
    average_values,
    coordinate,
    empirical_average,
    injective_tuple_mean,
    pair_product,
    permutation_mean,
    randomized_average,
    randomized_values,
    results_csv,
    rotation_draws,
    rotation_subsampled_values,
    subgroup_average,
    subgroup_values,
    triangle_density,
    u_statistic_average,
    u_statistic_values,
)
from folner.diagnostics import replicate_seeds
from folner.errors import EmptySampleError
from folner.groups import FolnerSequence, Lattice, SymmetricInf, folner_set
from folner.processes import MAField, isotropic_kernel, make_ma_field, make_sbm

Z1 = FolnerSequence(Lattice(1))
Z2 = FolnerSequence(Lattice(2))
MA1 = make_ma_field(1, 1, {(0,): 1.0, (1,): 1.0})
X0 = coordinate(1)
ISO = make_ma_field(2, 1, isotropic_kernel(1.0, 0.2, -0.5))


def test_constant_field_average():
    ones = make_ma_field(1, 0, {(0,): 1.0}, noise="ones")
    assert empirical_average(X0, ones, Z1, 5, seed=1).value == 1.0


def test_ma1_average_is_centred():
    vals = average_values(X0, MA1, Z1, 100, replicate_seeds(3, 2000))
    assert abs(vals.mean()) < 4 * 2.0 / math.sqrt(2000 * 201)


def test_average_matches_direct_sum():
    seeds = [11]
    x = MA1.sample_box((-7,), (7,), seeds)[0]
    direct = x[1:14].sum() / 13
    assert math.isclose(average_values(X0, MA1, Z1, 6, seeds)[0], direct, rel_tol=1e-14)


def test_pair_product_average_matches_direct_sum():
    f = pair_product((0, 0), (1, 0))
    x = ISO.sample_box((-3, -3), (4, 3), [5])[0]
    direct = (x[:-1, :] * x[1:, :]).mean()
    assert math.isclose(average_values(f, ISO, Z2, 3, [5])[0], direct, rel_tol=1e-13)


def test_symmetric_group_mean_of_first_coordinate():
    data = (0.3, -1.7, 2.9)
    assert permutation_mean(lambda t: t[0], data, 3, 1) == sum(data) / 3
    assert injective_tuple_mean(lambda t: t[0], data, 3, 1) == permutation_mean(lambda t: t[0], data, 3, 1)


def test_pairwise_u_statistic_symmetry():
    a, b, c = 0.5, 2.0, -1.25
    got = injective_tuple_mean(lambda t: t[0] * t[1], (a, b, c), 3, 2)
    assert got == (a * b + a * c + b * c) / 3


@pytest.mark.parametrize("n", range(2, 7))
def test_injective_reduction_matches_full_enumeration(n):
    data = [float(x) for x in np.random.default_rng(n).standard_normal(n)]
    for k in range(1, min(n, 3) + 1):
        g = lambda t: math.prod(t) + t[0]  # noqa: E731
        assert injective_tuple_mean(g, data, n, k) == permutation_mean(g, data, n, k)


def test_symmetric_folner_set_average_by_enumeration():
    perms = folner_set(FolnerSequence(SymmetricInf()), 4)
    data = (1.0, 2.0, 4.0, 8.0)
    via_group = sum(data[SymmetricInf.apply(p, 1) - 1] for p in perms) / len(perms)
    assert via_group == sum(data) / 4


def test_triangle_density_brute_force():
    sbm = make_sbm([0.4, 0.6], [[0.7, 0.1], [0.1, 0.5]])
    adj = sbm.adjacency(np.arange(1, 9), [1, 2, 3])
    brute = []
    for a in adj:
        tri = sum(a[i, j] * a[i, k] * a[j, k] for i in range(8) for j in range(i + 1, 8) for k in range(j + 1, 8))
        brute.append(tri / math.comb(8, 3))
    assert np.array_equal(triangle_density(adj), np.array(brute))


def test_erdos_renyi_triangle_density():
    er = make_sbm([1.0], [[0.5]])
    vals = u_statistic_values(TRIANGLE, er, 30, replicate_seeds(1, 2000))
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - 0.125) < 4 * se


def test_sampled_u_statistic_tracks_exact():
    sbm = make_sbm([0.5, 0.5], [[0.8, 0.2], [0.2, 0.8]])
    m = 100_000
    for seed in (1, 2, 3):
        exact = u_statistic_average(TRIANGLE, sbm, 6, seed).value
        sampled = u_statistic_average(TRIANGLE, sbm, 6, seed, mode="sampled", m=m).value
        se = math.sqrt(max(exact * (1 - exact), 1e-12) / m)
        assert abs(sampled - exact) < 4 * se + 1e-12


def test_arity_one_u_statistic_is_empirical_average():
    a = u_statistic_average(X0, MA1, 20, seed=4)
    b = empirical_average(X0, MA1, Z1, 20, seed=4)
    assert a.value == b.value


def test_haar_scheme_bit_identical():
    seeds = replicate_seeds(9, 300)
    plain = average_values(X0, MA1, Z1, 40, seeds)
    assert np.array_equal(randomized_values(X0, MA1, Z1, 40, HAAR, seeds)[0], plain)
    assert randomized_average(X0, MA1, Z1, 40, HAAR, 17).value == empirical_average(X0, MA1, Z1, 40, 17).value


def test_full_without_replacement_equals_haar():
    seeds = replicate_seeds(2, 50)
    full = SamplingScheme("without_replacement", 81)
    assert np.array_equal(randomized_values(X0, MA1, Z1, 40, full, seeds)[0],
                          average_values(X0, MA1, Z1, 40, seeds))


def test_poisson_scheme_unbiased():
    seeds = replicate_seeds(21, 2000)
    scheme = SamplingScheme("poisson", 1.0)
    rand = randomized_values(X0, MA1, Z1, 50, scheme, seeds)[0]
    plain = average_values(X0, MA1, Z1, 50, seeds)
    diff = rand - plain
    assert abs(diff.mean()) < 4 * diff.std(ddof=1) / math.sqrt(len(diff))


def test_poisson_resamples_empty_draws():
    scheme = SamplingScheme("poisson", 0.1)
    w, resamples = scheme.weights(2, seed=5)
    assert w.sum() > 0 and resamples > 0
    with pytest.raises(EmptySampleError):
        SamplingScheme("poisson", 1e-12, resample_limit=3).weights(2, seed=5)


def test_scheme_validation():
    with pytest.raises(ValueError):
        SamplingScheme("stratified")
    with pytest.raises(ValueError):
        SamplingScheme("without_replacement", 10).size(5)


def test_results_csv_header():
    res = randomized_average(X0, MA1, Z1, 5, SamplingScheme("poisson", 2.0), 3)
    text = results_csv([res])
    assert text.splitlines()[0] == "replicate,n,scheme,value,count,seed"


def test_statistic_reads_only_its_dependency_region():
    requested = []

    class Spy(MAField):
        def sample_box(self, lo, hi, seeds):
            requested.append((tuple(np.atleast_1d(lo)), tuple(np.atleast_1d(hi))))
            return super().sample_box(lo, hi, seeds)

    spy = Spy(MA1.d, MA1.order, MA1.coeffs, MA1.noise)
    f = pair_product((0,), (3,))
    base = average_values(f, spy, Z1, 10, [8])
    assert requested == [((-10,), (13,))]
    seen = []

    def product(v):
        seen.append(v.shape[-1])
        return v[..., 0] * v[..., 1]

    narrow = Statistic("narrow", product, offsets=((0,), (3,)))
    assert np.array_equal(base, average_values(narrow, MA1, Z1, 10, [8]))
    assert set(seen) == {2}


def test_rotation_invariant_statistic_subgroup_equals_full():
    f = coordinate(2)
    for seed in (1, 2, 3):
        trans, full = subgroup_average(f, ISO, 6, seed)
        assert trans.value == full.value


def test_subgroup_and_full_share_limit():
    f = pair_product((0, 0), (1, 0))
    small = subgroup_values(f, ISO, 4, replicate_seeds(1, 200))
    large = subgroup_values(f, ISO, 16, replicate_seeds(1, 200))
    assert np.mean((large.translation - large.full) ** 2) < np.mean((small.translation - small.full) ** 2)


def test_rotation_subsampling_identities():
    f = pair_product((0, 0), (1, 0))
    seeds = replicate_seeds(6, 20)
    exhaustive = rotation_subsampled_values(f, ISO, 5, 8, True, seeds, replace=False)
    assert np.array_equal(exhaustive, subgroup_values(f, ISO, 5, seeds).full)
    g = coordinate(2)
    single = rotation_subsampled_values(g, ISO, 5, 1, True, seeds)
    assert np.array_equal(single, subgroup_values(g, ISO, 5, seeds).translation)


def test_rotation_draws_shapes():
    regen = rotation_draws(10, 3, True, True, 1)
    fixed = rotation_draws(10, 3, False, True, 1)
    assert regen.shape == fixed.shape == (10, 3)
    assert (fixed == fixed[0]).all()
    assert ((regen >= 0) & (regen < 8)).all()
    with pytest.raises(ValueError):
        rotation_draws(4, 9, True, False, 1)


def test_lln_medians_decrease():
    grid = (8, 16, 32, 64)
    seeds = replicate_seeds(13, 200)
    medians = [np.median(np.abs(average_values(X0, MA1, Z1, n, seeds))) for n in grid]
    assert all(b < a for a, b in zip(medians, medians[1:]))
    assert medians[-1] < 2 * 2.0 / math.sqrt(129)


def test_custom_statistic_requires_offsets():
    bare = Statistic("bare", lambda v: v[..., 0])
    with pytest.raises(Exception):
        average_values(bare, MA1, Z1, 3, [1])
