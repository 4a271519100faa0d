"""Invariant process models with consistent window sampling and oracles.

All randomness is drawn through :mod:`folner.rng`, keyed on the seed and on
the site (or vertex, or cell) it belongs to. Sampling a larger window with the
same seed reproduces the values of every smaller window bit-exactly.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate
from scipy.stats import poisson

from . import rng
from .errors import InvalidModelError, SizeCapError, UnsupportedModelError
from .groups import Group, Lattice, SymmetricInf

DEFAULT_MAX_CELLS = 60_000_000

# mean, variance and fourth cumulant of each noise law
_NOISE_MOMENTS = {
    "gaussian": (0.0, 1.0, 0.0),
    "rademacher": (0.0, 1.0, -2.0),
    "uniform": (0.0, 1.0, -1.2),
    "ones": (1.0, 0.0, 0.0),
}
BERNOULLI_P = 0.1


def noise_moments(noise: str) -> tuple[float, float, float]:
    if noise == "bernoulli":
        p = BERNOULLI_P
        return 0.0, 1.0, (1.0 - 6.0 * p * (1.0 - p)) / (p * (1.0 - p))
    try:
        return _NOISE_MOMENTS[noise]
    except KeyError:
        raise InvalidModelError(f"unknown noise distribution {noise!r}") from None


@dataclass(frozen=True)
class MixingOracle:
    """Known mixing behaviour of a model.

    ``exact_zero``: the coefficient vanishes at distances above ``radius``.
    ``geometric``: the coefficient is bounded by ``rate ** t``.
    ``none``: nothing is known.
    """

    kind: str
    radius: int = 0
    rate: float | None = None

    def __post_init__(self):
        if self.kind not in ("exact_zero", "geometric", "none"):
            raise ValueError(f"unknown mixing kind {self.kind!r}")
        if self.kind == "geometric" and not (self.rate is not None and 0.0 < self.rate < 1.0):
            raise ValueError("geometric mixing needs a rate in (0, 1)")

    def alpha(self, t: float) -> float:
        """Upper bound on the mixing coefficient at distance ``t``."""
        if self.kind == "exact_zero":
            return 0.0 if t > self.radius else 0.25
        if self.kind == "geometric":
            return float(self.rate**t)
        return math.nan

    def widened(self, span: int) -> "MixingOracle":
        """Oracle for a statistic reading sites within ``span`` of its base point."""
        if self.kind == "exact_zero":
            return MixingOracle("exact_zero", self.radius + 2 * span)
        if self.kind == "geometric":
            return MixingOracle("geometric", self.radius, self.rate)
        return self


@dataclass(frozen=True)
class WindowSample:
    """Values of one realization on a finite set of lattice sites."""

    region: np.ndarray
    values: np.ndarray
    seed: int

    def __post_init__(self):
        if len(self.region) != len(self.values):
            raise ValueError("region and values differ in length")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["site", "value"])
        for site, v in zip(self.region, self.values):
            w.writerow(["(" + ",".join(str(int(x)) for x in np.atleast_1d(site)) + ")", repr(v.item())])
        return buf.getvalue()


class ProcessModel:
    family: str = "abstract"
    group: Group

    def sample(self, region, seed: int) -> WindowSample:
        raise NotImplementedError


def _box_grid(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


# ----------------------------------------------------------------------------
# moving-average fields on Z^d
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MAField(ProcessModel):
    """``X_t = sum_u c_u eps_{t+u}`` with i.i.d. standardized ``eps``."""

    d: int
    order: int
    coeffs: tuple  # sorted ((offset tuple, c), ...)
    noise: str
    max_cells: int = DEFAULT_MAX_CELLS

    @property
    def family(self) -> str:
        return "iid" if self.order == 0 else "ma_field"

    @property
    def group(self) -> Group:
        return Lattice(self.d)

    @property
    def mean(self) -> float:
        return noise_moments(self.noise)[0] * sum(c for _, c in self.coeffs)

    @property
    def mixing(self) -> MixingOracle:
        return MixingOracle("exact_zero", radius=2 * self.order)

    def coefficient(self, u) -> float:
        return dict(self.coeffs).get(tuple(u), 0.0)

    def covariance(self, t) -> float:
        """``Cov(X_0, X_t) = sum_u c_u c_{u+t}`` times the noise variance."""
        t = tuple(int(x) for x in np.atleast_1d(t))
        table = dict(self.coeffs)
        var = noise_moments(self.noise)[1]
        return var * sum(c * table.get(tuple(a + b for a, b in zip(u, t)), 0.0) for u, c in self.coeffs)

    def linear_eta_sq(self) -> float:
        """Asymptotic variance of the average of ``X_0``: ``(sum_u c_u)^2``."""
        return noise_moments(self.noise)[1] * sum(c for _, c in self.coeffs) ** 2

    def is_isotropic(self) -> bool:
        if self.d != 2:
            return False
        table = dict(self.coeffs)
        from .groups import D4

        for u, c in self.coeffs:
            for r in D4:
                v = tuple(int(x) for x in r @ np.array(u))
                if not math.isclose(table.get(v, 0.0), c, rel_tol=0, abs_tol=1e-15):
                    return False
        return True

    def sample_box(self, lo, hi, seeds) -> np.ndarray:
        """Field values on the box ``lo..hi`` (inclusive) for every seed.

        Returns an array of shape ``(len(seeds), *box_shape)``.
        """
        lo = np.asarray(lo, dtype=np.int64).reshape(self.d)
        hi = np.asarray(hi, dtype=np.int64).reshape(self.d)
        seeds = np.atleast_1d(seeds)
        m = self.order
        shape = tuple(int(x) for x in hi - lo + 1)
        if min(shape) < 1:
            raise ValueError("empty box")
        padded = tuple(s + 2 * m for s in shape)
        if len(seeds) * math.prod(padded) > self.max_cells:
            raise SizeCapError(f"window of {len(seeds)}x{math.prod(padded)} cells exceeds cap")
        grid = _box_grid(lo - m, hi + m)
        eps = rng.transform_noise(rng.uniforms(seeds, rng.NOISE, rng.site_codes(grid)), self.noise)
        out = np.zeros((len(seeds),) + shape)
        for u, c in self.coeffs:
            sl = tuple(slice(m + ui, m + ui + s) for ui, s in zip(u, shape))
            out += c * eps[(slice(None),) + sl]
        return out

    def sample(self, region, seed: int) -> WindowSample:
        region = np.asarray(region, dtype=np.int64).reshape(-1, self.d)
        lo, hi = region.min(0), region.max(0)
        box_vals = self.sample_box(lo, hi, [seed])[0]
        vals = box_vals[tuple((region - lo).T)]
        return WindowSample(region, vals, seed)


def make_ma_field(d: int, order: int, coeffs, noise: str = "gaussian") -> MAField:
    """Moving-average field of the given order on Z^d.

    ``coeffs`` is either a mapping from offset tuples (or ints for d=1) to
    weights, or an array of shape ``(2*order+1,)*d`` centred on offset 0.
    """
    if d < 1 or order < 0:
        raise InvalidModelError("dimension must be positive and order nonnegative")
    noise_moments(noise)
    if isinstance(coeffs, Mapping):
        items = {}
        for u, c in coeffs.items():
            u = (int(u),) if np.isscalar(u) else tuple(int(x) for x in u)
            if len(u) != d:
                raise InvalidModelError(f"offset {u} has wrong dimension")
            if max(abs(x) for x in u) > order:
                raise InvalidModelError(f"offset {u} exceeds order {order}")
            items[u] = float(c)
    else:
        arr = np.asarray(coeffs, dtype=np.float64)
        if arr.shape != (2 * order + 1,) * d:
            raise InvalidModelError(f"coefficient array must have shape {(2 * order + 1,) * d}")
        items = {tuple(int(x) - order for x in idx): float(arr[idx]) for idx in np.ndindex(arr.shape)}
    if not all(math.isfinite(c) for c in items.values()):
        raise InvalidModelError("coefficients must be finite")
    items = {u: c for u, c in items.items() if c != 0.0}
    if not items:
        raise InvalidModelError("at least one coefficient must be nonzero")
    return MAField(d, order, tuple(sorted(items.items())), noise)


def isotropic_kernel(center: float, axis: float, diagonal: float) -> dict:
    """3x3 D4-invariant kernel, scaled to unit sum of squares."""
    raw = {(0, 0): center}
    for u in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        raw[u] = axis
    for u in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        raw[u] = diagonal
    norm = math.sqrt(sum(c * c for c in raw.values()))
    return {u: c / norm for u, c in raw.items()}


# ----------------------------------------------------------------------------
# finite-alphabet Markov chains on Z
# ----------------------------------------------------------------------------


def _is_primitive(adj: np.ndarray) -> bool:
    n = len(adj)
    m = (adj > 0).astype(np.int64)
    reach = np.eye(n, dtype=np.int64)
    # Wielandt: a primitive matrix has a strictly positive power at (n-1)^2 + 1
    power = (n - 1) ** 2 + 1
    base = m
    while power:
        if power & 1:
            reach = np.minimum(reach @ base, 1)
        base = np.minimum(base @ base, 1)
        power >>= 1
    return bool(reach.all())


@dataclass(frozen=True, eq=False)
class MarkovChain(ProcessModel):
    """Stationary two-sided Markov chain of order ``order`` on Z.

    ``transition`` has shape ``(k**order, k)``: row ``r`` encodes the past
    ``(x_{t-q}, ..., x_{t-1})`` in base ``k`` (oldest digit most significant).
    """

    transition: np.ndarray
    order: int = 1

    def __post_init__(self):
        p = np.array(self.transition, dtype=np.float64)
        if p.ndim != 2 or self.order < 1:
            raise InvalidModelError("transition must be a 2-d array and order >= 1")
        k = p.shape[1]
        if p.shape[0] != k**self.order:
            raise InvalidModelError(f"transition needs {k ** self.order} rows for order {self.order}")
        if not np.all(np.isfinite(p)) or (p < 0).any():
            raise InvalidModelError("transition entries must be finite and nonnegative")
        if np.abs(p.sum(1) - 1.0).max() > 1e-12:
            raise InvalidModelError("transition rows must sum to 1 within 1e-12")
        p.setflags(write=False)
        object.__setattr__(self, "transition", p)
        lifted = self.lifted_matrix()
        if not _is_primitive(lifted):
            raise InvalidModelError("chain is reducible or periodic")
        object.__setattr__(self, "_stationary", _stationary(lifted))

    family = "markov_chain"

    @property
    def group(self) -> Group:
        return Lattice(1)

    @property
    def k(self) -> int:
        return self.transition.shape[1]

    @property
    def n_states(self) -> int:
        return self.k**self.order

    def lifted_matrix(self) -> np.ndarray:
        """Transition matrix of the chain of consecutive ``order``-tuples."""
        k, ns = self.k, self.k**self.order
        out = np.zeros((ns, ns))
        for s in range(ns):
            for x in range(k):
                out[s, (s * k + x) % ns] += self.transition[s, x]
        return out

    @property
    def lifted_stationary(self) -> np.ndarray:
        return self._stationary

    @property
    def stationary(self) -> np.ndarray:
        """Marginal law of a single site."""
        return self._stationary.reshape(-1, self.k).sum(0)

    @property
    def effective_order(self) -> int:
        """Smallest q such that transitions depend only on the last q symbols."""
        k, q = self.k, self.order
        rows = self.transition
        for qe in range(q + 1):
            keep = k**qe
            if all(np.array_equal(rows[s], rows[s % keep]) for s in range(len(rows))):
                return qe
        return q

    @property
    def entropy_rate(self) -> float:
        p = self.transition
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(p > 0, -np.log(p), 0.0)
        return float(self._stationary @ (p * logs).sum(1))

    @property
    def mixing(self) -> MixingOracle:
        if self.effective_order == 0:
            return MixingOracle("exact_zero", radius=0)
        lifted = np.linalg.matrix_power(self.lifted_matrix(), self.order)
        w = np.sqrt(self._stationary)
        sym = w[:, None] * lifted / w[None, :]
        sv = np.linalg.svd(sym, compute_uv=False)
        rate = float(sv[1] ** (1.0 / self.order))
        if rate <= 0.0:
            return MixingOracle("exact_zero", radius=self.order)
        return MixingOracle("geometric", radius=0, rate=min(rate, 1.0 - 1e-15))

    # -- sampling ------------------------------------------------------------

    def _reverse_cdf(self) -> np.ndarray:
        k, ns = self.k, self.n_states
        pi = self._stationary
        rev = np.zeros((ns, k))
        for s in range(ns):
            if pi[s] == 0:
                rev[s] = 1.0 / k
                continue
            for a in range(k):
                prev = a * k ** (self.order - 1) + s // k
                rev[s, a] = pi[prev] * self.transition[prev, s % k] / pi[s]
        rev /= rev.sum(1, keepdims=True)
        return np.cumsum(rev, 1)

    def sample_interval(self, lo: int, hi: int, seeds) -> np.ndarray:
        """Symbols on sites ``lo..hi`` for every seed, shape ``(R, hi-lo+1)``.

        Sites ``0..order-1`` are drawn from the stationary law of the lifted
        chain; later sites run forward and earlier sites run the reversed chain,
        each consuming the uniform keyed on its own site.
        """
        seeds = np.atleast_1d(seeds)
        q, k, ns = self.order, self.k, self.n_states
        a, b = min(lo, 0), max(hi, q - 1)
        sites = np.arange(a, b + 1)
        u = rng.uniforms(seeds, rng.MARKOV, rng.site_codes(sites[:, None]))
        start = rng.uniforms(seeds, rng.ANCHOR, np.array([0], dtype=np.uint64))[:, 0]
        cdf_pi = np.cumsum(self._stationary)
        state = np.minimum(np.searchsorted(cdf_pi, start, side="right"), ns - 1)
        out = np.empty((len(seeds), len(sites)), dtype=np.int64)
        i0 = -a
        for j in range(q):
            out[:, i0 + j] = (state // k ** (q - 1 - j)) % k
        fwd = np.cumsum(self.transition, 1)
        s = state.copy()
        for i in range(i0 + q, len(sites)):
            x = np.minimum((u[:, i, None] >= fwd[s]).sum(1), k - 1)
            out[:, i] = x
            s = (s * k + x) % ns
        rev = self._reverse_cdf()
        s = state.copy()
        for i in range(i0 - 1, -1, -1):
            x = np.minimum((u[:, i, None] >= rev[s]).sum(1), k - 1)
            out[:, i] = x
            s = x * k ** (q - 1) + s // k
        return out[:, lo - a: hi - a + 1]

    def sample(self, region, seed: int) -> WindowSample:
        region = np.asarray(region, dtype=np.int64).reshape(-1)
        lo, hi = int(region.min()), int(region.max())
        vals = self.sample_interval(lo, hi, [seed])[0]
        return WindowSample(region.reshape(-1, 1), vals[region - lo], seed)

    # -- exact probabilities -------------------------------------------------

    def joint_prob(self, config: Mapping[int, int]) -> float:
        """Stationary probability that ``X_t = config[t]`` for all keys ``t``."""
        if not config:
            return 1.0
        q, k, ns = self.order, self.k, self.n_states
        a = min(config)
        b = max(max(config), a + q - 1)
        allowed = [config.get(t) for t in range(a, b + 1)]
        alpha = self._stationary.copy()
        for j in range(q):
            x = allowed[j]
            if x is not None:
                digit = (np.arange(ns) // k ** (q - 1 - j)) % k
                alpha = np.where(digit == x, alpha, 0.0)
        for x in allowed[q:]:
            new = np.zeros(ns)
            xs = range(k) if x is None else (x,)
            for sym in xs:
                np.add.at(new, (np.arange(ns) * k + sym) % ns, alpha * self.transition[:, sym])
            alpha = new
        return float(alpha.sum())

    def conditional(self, given: Mapping[int, int], site: int = 0) -> np.ndarray:
        """Exact law of ``X_site`` given ``X_t = given[t]``; rows sum to 1."""
        if site in given:
            raise ValueError("conditioning set must not contain the target site")
        joint = np.array([self.joint_prob({**given, site: a}) for a in range(self.k)])
        total = joint.sum()
        if total <= 0:
            raise InvalidModelError("conditioning configuration has probability zero")
        return joint / total

    def reversed(self) -> "MarkovChain":
        """The time-reversed chain, which has the same stationary law."""
        q, k, ns = self.order, self.k, self.n_states
        pi = self._stationary
        rev = np.zeros((ns, k))
        for s in range(ns):
            # s lists (x_{t+q}, ..., x_{t+1}) oldest first in reversed time
            fut = [(s // k ** (q - 1 - j)) % k for j in range(q)][::-1]  # x_{t+1..t+q}
            for a in range(k):
                head = [a] + fut[:-1]
                row = 0
                for x in head:
                    row = row * k + x
                tail = 0
                for x in fut:
                    tail = tail * k + x
                rev[s, a] = pi[row] * self.transition[row, fut[-1]] / pi[tail] if pi[tail] > 0 else 1.0 / k
        rev /= rev.sum(1, keepdims=True)
        return MarkovChain(rev, q)

    def log_prob_path(self, values: np.ndarray) -> np.ndarray:
        """Chain-rule log-probability of consecutive symbols, per replicate.

        ``values`` has shape ``(R, L)``; the first ``order`` sites use the
        lifted stationary law and each later site its transition probability.
        Returns ``(R, L)`` per-site conditional log-probabilities.
        """
        values = np.atleast_2d(values)
        q, k = self.order, self.k
        R, L = values.shape
        out = np.empty((R, L))
        logp = np.log(self.transition, where=self.transition > 0, out=np.full_like(self.transition, -np.inf))
        if L < q:
            for r in range(R):
                prev = 0.0
                for j in range(L):
                    pj = math.log(self.joint_prob({t: int(values[r, t]) for t in range(j + 1)}))
                    out[r, j] = pj - prev
                    prev = pj
            return out
        # leading block from the marginal of the lifted state, split by chain rule
        for j in range(q):
            head = values[:, : j + 1]
            codes, inv = np.unique(head, axis=0, return_inverse=True)
            inv = np.asarray(inv).reshape(-1)
            lp = np.array([math.log(self.joint_prob({t: int(c[t]) for t in range(j + 1)})) for c in codes])
            out[:, j] = lp[inv]
        if q > 1:
            out[:, 1:q] = out[:, 1:q] - out[:, : q - 1]
        state = np.zeros(R, dtype=np.int64)
        for j in range(q):
            state = state * k + values[:, j]
        for j in range(q, L):
            x = values[:, j]
            out[:, j] = logp[state, x]
            state = (state * k + x) % self.n_states
        return out


def _stationary(lifted: np.ndarray) -> np.ndarray:
    n = len(lifted)
    a = np.vstack([lifted.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi = np.linalg.lstsq(a, rhs, rcond=None)[0]
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if np.abs(pi @ lifted - pi).max() > 1e-12:
        raise InvalidModelError("stationary distribution did not converge to 1e-12")
    return pi


def make_markov_chain(transition, order: int = 1) -> MarkovChain:
    return MarkovChain(np.asarray(transition, dtype=np.float64), order)


def make_iid_categorical(probs) -> MarkovChain:
    """i.i.d. symbols with the given marginal law, as an order-1 chain."""
    probs = np.asarray(probs, dtype=np.float64)
    return MarkovChain(np.tile(probs, (len(probs), 1)), 1)


# ----------------------------------------------------------------------------
# stochastic block model
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SBM(ProcessModel):
    """Exchangeable random graph with latent classes ``I_i ~ pi``."""

    pi: np.ndarray
    P: np.ndarray

    family = "sbm_graph"

    def __post_init__(self):
        pi = np.array(self.pi, dtype=np.float64).reshape(-1)
        P = np.array(self.P, dtype=np.float64)
        if P.shape != (len(pi), len(pi)):
            raise InvalidModelError("P must be r x r")
        if (pi < 0).any() or abs(pi.sum() - 1.0) > 1e-12:
            raise InvalidModelError("pi must be a probability vector")
        if not np.array_equal(P, P.T) or (P < 0).any() or (P > 1).any():
            raise InvalidModelError("P must be symmetric with entries in [0, 1]")
        pi.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "P", P)

    @property
    def group(self) -> Group:
        return SymmetricInf()

    @property
    def r(self) -> int:
        return len(self.pi)

    @property
    def edge_density(self) -> float:
        return float(self.pi @ self.P @ self.pi)

    def classes(self, vertices, seeds) -> np.ndarray:
        vertices = np.asarray(vertices, dtype=np.int64)
        u = rng.uniforms(seeds, rng.CLASSES, rng.site_codes(vertices[:, None]))
        cdf = np.cumsum(self.pi)
        return np.minimum(np.searchsorted(cdf, u, side="right"), self.r - 1)

    def adjacency(self, vertices, seeds) -> np.ndarray:
        """Adjacency matrices on the listed vertex labels, shape ``(R, n, n)``.

        Entry ``(a, b)`` depends only on the unordered label pair and the seed,
        so relabelled or enlarged vertex sets reproduce shared entries exactly.
        """
        vertices = np.asarray(vertices, dtype=np.int64)
        seeds = np.atleast_1d(seeds)
        cls = self.classes(vertices, seeds)
        lo = np.minimum.outer(vertices, vertices)
        hi = np.maximum.outer(vertices, vertices)
        codes = rng.site_codes(np.stack([lo, hi], -1))
        u = rng.uniforms(seeds, rng.EDGES, codes)
        prob = self.P[cls[:, :, None], cls[:, None, :]]
        adj = (u < prob).astype(np.int8)
        adj[:, np.arange(len(vertices)), np.arange(len(vertices))] = 0
        return adj

    def sample(self, region, seed: int) -> WindowSample:
        """Edge indicators on all pairs ``i < j`` of the listed vertices."""
        vertices = np.asarray(region, dtype=np.int64).reshape(-1)
        adj = self.adjacency(vertices, [seed])[0]
        iu = np.triu_indices(len(vertices), 1)
        pairs = np.stack([vertices[iu[0]], vertices[iu[1]]], -1)
        return WindowSample(pairs, adj[iu].astype(np.float64), seed)


def make_sbm(pi, P) -> SBM:
    return SBM(np.asarray(pi, dtype=np.float64), np.asarray(P, dtype=np.float64))


# ----------------------------------------------------------------------------
# graphex (Poisson edge process)
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphexSample:
    """Vertices ordered by location with their labels, and the edge list."""

    locations: np.ndarray
    labels: np.ndarray
    edges: np.ndarray  # (E, 2) indices into locations, i < j
    seed: int

    @property
    def n_vertices(self) -> int:
        return len(self.locations)


@dataclass(frozen=True, eq=False)
class Graphex(ProcessModel):
    """Poisson points on ``[0, s) x [0, label_cap)`` joined with prob ``omega``.

    Points are generated cell by cell on the unit grid, so the points in a
    smaller window are exactly those of a larger window restricted to it.
    """

    omega: Callable[[np.ndarray, np.ndarray], np.ndarray]
    s: float
    label_cap: float | None = None

    family = "graphex"

    def __post_init__(self):
        if not (self.s > 0 and math.isfinite(self.s)):
            raise InvalidModelError("s must be a positive finite number")
        if self.label_cap is None:
            object.__setattr__(self, "label_cap", float(self.s))
        probe = np.linspace(0.0, self.label_cap, 7)
        vals = np.asarray(self.omega(probe[:, None], probe[None, :]), dtype=np.float64)
        if not np.all(np.isfinite(vals)) or (vals < 0).any() or (vals > 1).any():
            raise InvalidModelError("omega must take values in [0, 1]")

    @property
    def group(self) -> Group:
        return Lattice(1)

    def _points(self, seed: int, s: float):
        nx, ny = math.ceil(s), math.ceil(self.label_cap)
        cells = _box_grid(np.array([0, 0]), np.array([nx - 1, ny - 1])).reshape(-1, 2)
        cnt_codes = rng.site_codes(np.concatenate([cells, np.zeros((len(cells), 1), np.int64)], 1))
        counts = poisson.ppf(rng.uniform(seed, rng.POINTS, cnt_codes), 1.0).astype(np.int64)
        owner = np.repeat(np.arange(len(cells)), counts)
        idx = np.arange(len(owner)) - np.repeat(np.cumsum(counts) - counts, counts)
        base = np.concatenate([cells[owner], np.zeros((len(owner), 1), np.int64)], 1)
        base[:, 2] = 2 * idx + 1
        ids = rng.site_codes(base)
        xloc = cells[owner, 0] + rng.uniform(seed, rng.POINTS, ids)
        base[:, 2] += 1
        ylab = cells[owner, 1] + rng.uniform(seed, rng.POINTS, rng.site_codes(base))
        keep = (xloc < s) & (ylab < self.label_cap)
        order = np.argsort(xloc[keep], kind="stable")
        return xloc[keep][order], ylab[keep][order], ids[keep][order]

    def sample_graph(self, seed: int, s: float | None = None) -> GraphexSample:
        s = self.s if s is None else s
        x, y, ids = self._points(seed, s)
        n = len(x)
        if n < 2:
            return GraphexSample(x, y, np.zeros((0, 2), np.int64), seed)
        i, j = np.triu_indices(n, 1)
        a, b = np.minimum(ids[i], ids[j]), np.maximum(ids[i], ids[j])
        with np.errstate(over="ignore"):
            pair = rng._mix(a * np.uint64(rng._GOLDEN) + b)
        u = rng.uniform(seed, rng.EDGES, pair)
        w = np.asarray(self.omega(y[i], y[j]), dtype=np.float64)
        if (w < 0).any() or (w > 1).any():
            raise InvalidModelError("omega returned a value outside [0, 1]")
        hit = u < w
        return GraphexSample(x, y, np.stack([i[hit], j[hit]], 1), seed)

    def expected_edges(self, s: float | None = None) -> float:
        """``(s^2 / 2) * integral of omega over [0, label_cap)^2``."""
        s = self.s if s is None else s
        return 0.5 * s * s * self.omega_integral()

    def omega_integral(self) -> float:
        c = self.label_cap
        val, _ = integrate.dblquad(lambda v, u: float(self.omega(np.array(u), np.array(v))), 0, c, 0, c)
        return float(val)

    def sample(self, region, seed: int) -> WindowSample:
        g = self.sample_graph(seed)
        return WindowSample(g.edges, np.ones(len(g.edges)), seed)


def make_graphex(omega, s: float, label_cap: float | None = None) -> Graphex:
    return Graphex(omega, float(s), None if label_cap is None else float(label_cap))


def exp_omega(u, v):
    """The edge function ``exp(-u - v)``."""
    return np.exp(-np.asarray(u) - np.asarray(v))


# ----------------------------------------------------------------------------
# Dobrushin interdependence coefficient
# ----------------------------------------------------------------------------


def _tv(p: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    return sum((abs(a - b) for a, b in zip(p, q)), Fraction(0)) / 2


def _markov_full_conditional(P, k: int, q: int, left: tuple, right: tuple) -> list[Fraction]:
    weights = []
    for x in range(k):
        seq = left + (x,) + right
        w = Fraction(1)
        for t in range(q, 2 * q + 1):
            row = 0
            for s in seq[t - q: t]:
                row = row * k + s
            w *= P[row][seq[t]]
        weights.append(w)
    total = sum(weights, Fraction(0))
    if total == 0:
        return [Fraction(1, k)] * k
    return [w / total for w in weights]


def dobrushin_coefficient(model: ProcessModel) -> float:
    """Summed worst-case sensitivity of a site's full conditional.

    Exhaustive over neighbourhood configurations in exact rational arithmetic,
    so repeated calls agree bit for bit.
    """
    if isinstance(model, MarkovChain):
        q, k = model.order, model.k
        P = [[Fraction(float(x)) for x in row] for row in model.transition]
        configs = list(itertools.product(range(k), repeat=2 * q))
        cond = {c: _markov_full_conditional(P, k, q, c[:q], c[q:]) for c in configs}
        total = Fraction(0)
        for pos in range(2 * q):
            worst = Fraction(0)
            for c in configs:
                for alt in range(c[pos] + 1, k):
                    c2 = c[:pos] + (alt,) + c[pos + 1:]
                    worst = max(worst, _tv(cond[c], cond[c2]))
            total += worst
        return float(total)
    if isinstance(model, MAField) and model.order == 0 and model.noise in ("rademacher", "bernoulli", "ones"):
        return 0.0
    raise UnsupportedModelError(f"no finite-alphabet neighbourhood for {model.family!r}")
