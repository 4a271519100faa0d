"""Deterministic, randomized, U-statistic and subgroup averages.

Lattice-type averages share one evaluation engine: the elements of ``A_n`` are
listed in sorted order, every site read by ``f(phi X)`` is mapped through the
element, the field is sampled once on the bounding box, and the per-element
values are reduced row by row. Because all averages reduce the same arrays
in the same order, identities such as "Haar scheme equals the plain average"
hold bit for bit.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import rng
from .errors import EmptySampleError, SizeCapError, UnsupportedModelError
from .groups import FolnerSequence, LatticeDihedral, folner_set
from .processes import SBM, MAField, MarkovChain, ProcessModel

log = logging.getLogger(__name__)

CHUNK = 64
DEFAULT_RESAMPLE_LIMIT = 100


@dataclass(frozen=True, eq=False)
class Statistic:
    """A real functional of the process with a finite dependency region.

    For lattice models ``offsets`` lists the sites read relative to the base
    point and ``func`` maps an array ``(..., len(offsets))`` to ``(...)``.
    For exchangeable models ``offsets`` is empty and ``arity`` counts the
    coordinates (or vertices) that ``func`` reads.

    ``moment_order`` is the largest p with ``E|f(X)|^p`` known to be finite.
    ``monomials`` optionally describes ``func`` as a polynomial
    ``sum coef * prod X_{offsets[i]}``; the Gaussian covariance oracle uses it.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    offsets: tuple = ()
    arity: int = 1
    lipschitz: tuple = (1.0,)
    moment_order: float = math.inf
    monomials: tuple | None = None
    bounded: bool = False

    @property
    def radius(self) -> int:
        if not self.offsets:
            return 0
        return max(max(abs(x) for x in o) for o in self.offsets)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        return self.func(values)


def _first(v):
    return v[..., 0]


def _product(v):
    return v[..., 0] * v[..., 1]


def coordinate(d: int = 1, offset=None, bounded: bool = False) -> Statistic:
    """``f(X) = X_offset`` (default: the base point)."""
    offset = (0,) * d if offset is None else tuple(offset)
    return Statistic(
        name=f"X{offset}", func=_first, offsets=(offset,),
        monomials=((1.0, (0,)),), bounded=bounded,
    )


def pair_product(a, b) -> Statistic:
    """``f(X) = X_a * X_b``."""
    return Statistic(
        name=f"X{tuple(a)}*X{tuple(b)}", func=_product, offsets=(tuple(a), tuple(b)),
        monomials=((1.0, (0, 1)),),
    )


def _triangle(adj):
    return adj[..., 0, 1] * adj[..., 0, 2] * adj[..., 1, 2]


TRIANGLE = Statistic(name="triangle", func=_triangle, arity=3, bounded=True)


@dataclass(frozen=True)
class SamplingScheme:
    """Random weights on ``A_n`` used by the randomized average.

    kind: ``haar`` | ``poisson`` (param = intensity) |
    ``with_replacement`` (param = draws) | ``without_replacement`` (param = size).
    A ``param`` of ``None`` for the uniform schemes means ``|A_n|``.
    """

    kind: str = "haar"
    param: float | None = None
    resample_limit: int = DEFAULT_RESAMPLE_LIMIT

    def __post_init__(self):
        if self.kind not in ("haar", "poisson", "with_replacement", "without_replacement"):
            raise ValueError(f"unknown sampling scheme {self.kind!r}")
        if self.kind == "poisson" and not (self.param and self.param > 0):
            raise ValueError("poisson scheme needs a positive intensity")

    @property
    def tag(self) -> str:
        return self.kind if self.param is None else f"{self.kind}({self.param:g})"

    def size(self, count: int) -> int:
        m = count if self.param is None else int(self.param)
        if self.kind == "without_replacement" and not 1 <= m <= count:
            raise ValueError(f"cannot draw {m} of {count} elements without replacement")
        if m < 1:
            raise ValueError("sample size must be positive")
        return m

    def weights(self, count: int, seed: int) -> tuple[np.ndarray, int]:
        """Weights on the ``count`` sorted elements and the resample count."""
        if self.kind == "haar":
            return np.ones(count), 0
        gen = rng.generator(seed, rng.SCHEME)
        if self.kind == "with_replacement":
            return gen.multinomial(self.size(count), np.full(count, 1.0 / count)).astype(np.float64), 0
        if self.kind == "without_replacement":
            w = np.zeros(count)
            w[gen.choice(count, size=self.size(count), replace=False)] = 1.0
            return w, 0
        for attempt in range(self.resample_limit + 1):
            w = gen.poisson(self.param, size=count).astype(np.float64)
            if w.any():
                if attempt:
                    log.info("poisson scheme resampled %d times (|A_n|=%d)", attempt, count)
                return w, attempt
        raise EmptySampleError(f"poisson scheme empty after {self.resample_limit} resamples")


HAAR = SamplingScheme("haar")


@dataclass(frozen=True)
class AverageResult:
    value: float
    n: int
    count: float
    scheme: str
    seed: int
    resamples: int = 0

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("average is not finite")


def results_csv(results: Sequence[AverageResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replicate", "n", "scheme", "value", "count", "seed"])
    for i, r in enumerate(results):
        w.writerow([i, r.n, r.scheme, repr(r.value), repr(float(r.count)), r.seed])
    return buf.getvalue()


# ----------------------------------------------------------------------------
# lattice evaluation engine
# ----------------------------------------------------------------------------


def row_sums(a: np.ndarray) -> np.ndarray:
    """Sum each row as a contiguous 1-d array, so equal rows give equal sums."""
    a = np.asarray(a, dtype=np.float64)
    return np.array([np.ascontiguousarray(row).reshape(-1).sum() for row in a])


def site_means(vals: np.ndarray) -> np.ndarray:
    """Mean over point-group copies at each site, then over sites; ``(R, N, m) -> (R,)``.

    Averaging per site first makes a rotation-invariant statistic reproduce
    the translation-only average bit for bit.
    """
    per_site = np.ascontiguousarray(vals).sum(axis=-1) / vals.shape[-1]
    return row_sums(per_site) / vals.shape[1]


def _sorted_elements(seq: FolnerSequence, n: int) -> list:
    return sorted(folner_set(seq, n))


def _sample_box(model: ProcessModel, lo, hi, seeds) -> np.ndarray:
    if isinstance(model, MAField):
        return model.sample_box(lo, hi, seeds)
    if isinstance(model, MarkovChain):
        return model.sample_interval(int(lo[0]), int(hi[0]), seeds).astype(np.float64)
    raise UnsupportedModelError(f"{model.family!r} is not a lattice model")


def element_values(f: Statistic, model: ProcessModel, group, elements, seeds) -> np.ndarray:
    """``f(phi X)`` for every listed element and seed, shape ``(R, N)``.

    ``(phi X)_t = X_{phi . t}`` where ``phi . t = R t + z`` for ``phi = (z, R)``.
    """
    if not f.offsets:
        raise UnsupportedModelError("statistic has no lattice dependency region")
    z, lin = group.site_maps(elements)
    offs = np.array(f.offsets, dtype=np.int64)
    sites = np.einsum("nij,oj->noi", lin, offs) + z[:, None, :]
    lo, hi = sites.reshape(-1, sites.shape[-1]).min(0), sites.reshape(-1, sites.shape[-1]).max(0)
    seeds = np.atleast_1d(seeds)
    out = np.empty((len(seeds), len(z)))
    idx = tuple(np.moveaxis(sites - lo, -1, 0))
    for start in range(0, len(seeds), CHUNK):
        block = _sample_box(model, lo, hi, seeds[start:start + CHUNK])
        vals = block[(slice(None),) + idx]
        out[start:start + CHUNK] = f(vals)
    return out


def average_values(f: Statistic, model: ProcessModel, seq: FolnerSequence, n: int, seeds) -> np.ndarray:
    """Plain Følner averages for many seeds at once, shape ``(R,)``."""
    elems = _sorted_elements(seq, n)
    vals = element_values(f, model, seq.group, elems, seeds)
    return row_sums(vals) / len(elems)


def empirical_average(f: Statistic, model: ProcessModel, seq: FolnerSequence, n: int, seed: int) -> AverageResult:
    """``(1/|A_n|) * sum_{phi in A_n} f(phi X)``, exact over the whole set."""
    if f.arity != 1:
        raise ValueError("empirical_average needs an arity-1 statistic")
    value = average_values(f, model, seq, n, [seed])[0]
    return AverageResult(float(value), n, len(folner_set(seq, n)), "haar", seed)


def randomized_values(f, model, seq, n, scheme: SamplingScheme, seeds, scheme_seeds=None):
    """Randomized averages ``sum w f / sum w``; returns (values, weight totals, resamples)."""
    elems = _sorted_elements(seq, n)
    vals = element_values(f, model, seq.group, elems, seeds)
    scheme_seeds = seeds if scheme_seeds is None else scheme_seeds
    w = np.empty_like(vals)
    resamples = np.zeros(len(vals), dtype=np.int64)
    for i, s in enumerate(np.atleast_1d(scheme_seeds)):
        w[i], resamples[i] = scheme.weights(len(elems), int(s))
    totals = row_sums(w)
    return row_sums(w * vals) / totals, totals, resamples


def randomized_average(f, model, seq, n, scheme: SamplingScheme, seed: int) -> AverageResult:
    """Average of ``f(phi X)`` under the scheme's random weights on ``A_n``.

    The weights are drawn from the ``SCHEME`` stream, independent of ``X``.
    """
    vals, totals, res = randomized_values(f, model, seq, n, scheme, [seed])
    return AverageResult(float(vals[0]), n, float(totals[0]), scheme.tag, seed, int(res[0]))


# ----------------------------------------------------------------------------
# exchangeable averages
# ----------------------------------------------------------------------------


def _exact_sum(values) -> Fraction:
    return sum((Fraction(float(v)) for v in values), Fraction(0))


def permutation_mean(g: Callable, data: Sequence[float], n: int, k: int) -> float:
    """Average of ``g(x_{phi(1)}, ..., x_{phi(k)})`` over all of ``S_n``, exact."""
    if k > n:
        raise ValueError("arity exceeds n")
    if n > 8:
        raise SizeCapError("permutation enumeration refused above n = 8")
    total = _exact_sum(g(tuple(data[p[i]] for i in range(k))) for p in itertools.permutations(range(n)))
    return float(total / math.factorial(n))


def injective_tuple_mean(g: Callable, data: Sequence[float], n: int, k: int) -> float:
    """Average of ``g`` over injective k-tuples of ``x_1..x_n``, exact.

    Equals :func:`permutation_mean` because every injective tuple is the
    prefix of exactly ``(n-k)!`` permutations.
    """
    if k > n:
        raise ValueError("arity exceeds n")
    total = _exact_sum(g(tuple(data[i] for i in t)) for t in itertools.permutations(range(n), k))
    return float(total / math.perm(n, k))


def triangle_density(adj: np.ndarray) -> np.ndarray:
    """Triangles divided by ``C(n, 3)``, exact integer counting; batched."""
    adj = np.asarray(adj, dtype=np.int64)
    n = adj.shape[-1]
    a2 = adj @ adj
    tri = np.einsum("...ij,...ji->...", a2, adj) // 6
    return tri / math.comb(n, 3)


def _graph_tuple_values(g: Statistic, adj: np.ndarray, tuples: np.ndarray) -> np.ndarray:
    k = tuples.shape[1]
    sub = adj[:, tuples[:, :, None], tuples[:, None, :]]
    assert sub.shape[-2:] == (k, k)
    return g(sub.astype(np.float64))


def u_statistic_values(g: Statistic, model: SBM, n: int, seeds, mode: str = "exact", m: int | None = None) -> np.ndarray:
    """U-statistic of an induced-subgraph functional on vertices ``1..n``."""
    if g.arity > n:
        raise ValueError("arity exceeds n")
    seeds = np.atleast_1d(seeds)
    out = np.empty(len(seeds))
    for start in range(0, len(seeds), CHUNK):
        chunk = seeds[start:start + CHUNK]
        adj = model.adjacency(np.arange(1, n + 1), chunk)
        if mode == "exact":
            if g is TRIANGLE:
                out[start:start + CHUNK] = triangle_density(adj)
                continue
            tuples = np.array(list(itertools.permutations(range(n), g.arity)))
            out[start:start + CHUNK] = _graph_tuple_values(g, adj, tuples).mean(axis=1)
        elif mode == "sampled":
            if not m:
                raise ValueError("sampled mode needs a tuple count")
            for i, s in enumerate(chunk):
                gen = rng.generator(int(s), rng.SCHEME)
                tuples = np.argsort(gen.random((m, n)), axis=1)[:, :g.arity]
                out[start + i] = _graph_tuple_values(g, adj[i:i + 1], tuples).mean()
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return out


def u_statistic_average(g: Statistic, model: ProcessModel, n: int, seed: int, mode: str = "exact",
                        m: int | None = None, seq: FolnerSequence | None = None) -> AverageResult:
    """Generalized U-statistic over injective k-tuples of ``A_n``.

    Arity-1 lattice statistics reduce to :func:`empirical_average`.
    """
    if isinstance(model, SBM):
        value = u_statistic_values(g, model, n, [seed], mode, m)[0]
        count = math.perm(n, g.arity) if mode == "exact" else m
        return AverageResult(float(value), n, count, "haar" if mode == "exact" else f"sampled({m})", seed)
    if g.arity == 1:
        return empirical_average(g, model, seq or FolnerSequence(model.group), n, seed)
    raise UnsupportedModelError("U-statistics of arity > 1 need an exchangeable model")


# ----------------------------------------------------------------------------
# subgroup and rotation-subsampled averages on Z^2 x| D4
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SubgroupAverages:
    translation: np.ndarray
    full: np.ndarray


def _chunked(f, model, group, elems, seeds, reduce):
    seeds = np.atleast_1d(seeds)
    parts = []
    for start in range(0, len(seeds), CHUNK):
        chunk = seeds[start:start + CHUNK]
        parts.append(reduce(element_values(f, model, group, elems, chunk), start))
    return np.concatenate(parts)


def subgroup_values(f: Statistic, model: MAField, n: int, seeds) -> SubgroupAverages:
    """Translation-only and full-group averages from the same realizations."""
    group = LatticeDihedral()
    full_elems = sorted(group.ball(n).elements)
    is_translation = np.array([e[1] == 0 for e in full_elems])

    def reduce(vals, _):
        trans = vals[:, is_translation]
        full = site_means(vals.reshape(len(vals), trans.shape[1], 8))
        return np.stack([row_sums(trans) / trans.shape[1], full], 1)

    both = _chunked(f, model, group, full_elems, seeds, reduce)
    return SubgroupAverages(both[:, 0].copy(), both[:, 1].copy())


def subgroup_average(f: Statistic, model: MAField, n: int, seed: int) -> tuple[AverageResult, AverageResult]:
    """(translation-subgroup average, full-group average) for one realization."""
    res = subgroup_values(f, model, n, [seed])
    count = (2 * n + 1) ** 2
    return (
        AverageResult(float(res.translation[0]), n, count, "translations", seed),
        AverageResult(float(res.full[0]), n, 8 * count, "full_group", seed),
    )


def rotation_draws(n_sites: int, m: int, regenerate: bool, replace: bool, seed: int) -> np.ndarray:
    """Point-group indices ``(n_sites, m)``, sorted within each site."""
    if m < 1 or (not replace and m > 8):
        raise ValueError("need 1 <= m (<= 8 without replacement)")
    gen = rng.generator(seed, rng.ROTATIONS)
    rows = n_sites if regenerate else 1
    if replace:
        draws = gen.integers(0, 8, size=(rows, m))
    else:
        draws = np.argsort(gen.random((rows, 8)), axis=1)[:, :m]
    draws = np.sort(draws, axis=1)
    return np.broadcast_to(draws, (n_sites, m))


def rotation_subsampled_values(f: Statistic, model: MAField, n: int, m: int, regenerate: bool, seeds,
                               replace: bool = True, rotation_seeds=None) -> np.ndarray:
    """``(1/(m|A_n|)) sum_z sum_j f(Theta_j^z (X + z))`` for every seed."""
    group = LatticeDihedral()
    n_sites = (2 * n + 1) ** 2
    seeds = np.atleast_1d(seeds)
    rotation_seeds = seeds if rotation_seeds is None else np.atleast_1d(rotation_seeds)
    all_elems = sorted(group.ball(n).elements)

    def reduce(vals, start):
        vals = vals.reshape(len(vals), n_sites, 8)
        out = np.empty(len(vals))
        for i in range(len(vals)):
            draws = rotation_draws(n_sites, m, regenerate, replace, int(rotation_seeds[start + i]))
            picked = np.take_along_axis(vals[i], draws, axis=1)
            out[i] = site_means(picked[None])[0]
        return out

    return _chunked(f, model, group, all_elems, seeds, reduce)


def rotation_subsampled_average(f, model, n, m, regenerate, seed, replace=True) -> AverageResult:
    value = rotation_subsampled_values(f, model, n, m, regenerate, [seed], replace)[0]
    tag = f"rotations(m={m},{'regen' if regenerate else 'fixed'})"
    return AverageResult(float(value), n, m * (2 * n + 1) ** 2, tag, seed)
