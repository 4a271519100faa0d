"""Countable amenable groups, metric balls and Følner sequences.

Three families are provided:

* ``Lattice(d)`` -- the additive group Z^d with the Chebyshev (L-infinity)
  word metric, so that balls are the boxes {-r..r}^d.
* ``SymmetricInf()`` -- finitary permutations of {1, 2, ...} with the
  transposition word metric (Cayley distance).
* ``LatticeDihedral()`` -- Z^2 extended by the 8-element point group of
  the square, acting on sites by ``t -> R t + z``.

Element sets are Python frozensets of canonical element tuples, so that
intersections and symmetric differences are exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

import numpy as np
from scipy.signal import fftconvolve

from .errors import SizeCapError

Element = Hashable

DEFAULT_MAX_ELEMENTS = 2_000_000


class Group:
    """Interface shared by the concrete group families."""

    family: str = "abstract"
    max_elements: int = DEFAULT_MAX_ELEMENTS

    @property
    def identity(self) -> Element:
        raise NotImplementedError

    def compose(self, a: Element, b: Element) -> Element:
        raise NotImplementedError

    def inverse(self, a: Element) -> Element:
        raise NotImplementedError

    def distance(self, a: Element, b: Element) -> int:
        raise NotImplementedError

    def norm(self, a: Element) -> int:
        return self.distance(a, self.identity)

    def encode(self, a: Element) -> str:
        raise NotImplementedError

    def ball(self, r: int) -> "Ball":
        raise NotImplementedError

    def ball_size(self, r: int) -> int:
        return len(self.ball(r).elements)

    def random_element(self, rng: np.random.Generator, scale: int = 5) -> Element:
        raise NotImplementedError

    def default_folner_set(self, n: int) -> frozenset:
        raise NotImplementedError

    def _check_cap(self, size: int) -> None:
        if size > self.max_elements:
            raise SizeCapError(
                f"enumeration of {size} elements exceeds cap {self.max_elements}"
            )


@dataclass(frozen=True)
class Ball:
    """Closed metric ball around the identity."""

    radius: int
    elements: frozenset

    def __len__(self) -> int:
        return len(self.elements)


# ----------------------------------------------------------------------------
# Z^d
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Lattice(Group):
    d: int = 1
    max_elements: int = DEFAULT_MAX_ELEMENTS
    family: str = field(default="lattice", init=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("lattice dimension must be positive")

    @property
    def identity(self):
        return (0,) * self.d

    def compose(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inverse(self, a):
        return tuple(-x for x in a)

    def distance(self, a, b):
        return max(abs(x - y) for x, y in zip(a, b))

    def encode(self, a):
        return "z:(" + ",".join(str(x) for x in a) + ")"

    def ball_size(self, r):
        return (2 * int(r) + 1) ** self.d if r >= 0 else 0

    def ball(self, r):
        r = int(r)
        if r < 0:
            raise ValueError("radius must be nonnegative")
        self._check_cap(self.ball_size(r))
        return Ball(r, box(self.d, r))

    def random_element(self, rng, scale=5):
        return tuple(int(x) for x in rng.integers(-scale, scale + 1, size=self.d))

    def default_folner_set(self, n):
        self._check_cap(self.ball_size(n))
        return box(self.d, n)

    # lattice elements act on sites by translation
    def site_maps(self, elements):
        z = np.array(list(elements), dtype=np.int64).reshape(-1, self.d)
        lin = np.broadcast_to(np.eye(self.d, dtype=np.int64), (len(z), self.d, self.d))
        return z, lin


def box(d: int, r: int) -> frozenset:
    """The box {-r..r}^d as a frozenset of integer tuples."""
    rng_ = range(-r, r + 1)
    return frozenset(itertools.product(rng_, repeat=d))


# ----------------------------------------------------------------------------
# finitary symmetric group
# ----------------------------------------------------------------------------


def _canon_perm(p) -> tuple:
    p = list(p)
    while p and p[-1] == len(p):
        p.pop()
    return tuple(p)


@dataclass(frozen=True)
class SymmetricInf(Group):
    """Permutations of {1, 2, ...} moving finitely many points.

    An element is the tuple of images ``(p(1), ..., p(N))``; trailing fixed
    points are trimmed so every element has one canonical encoding. Balls are
    infinite for this group, so :meth:`ball` enumerates within S_support only.
    """

    max_degree: int = 8
    ball_support: int = 6
    max_elements: int = DEFAULT_MAX_ELEMENTS
    family: str = field(default="symmetric", init=False)

    @property
    def identity(self):
        return ()

    @staticmethod
    def apply(p, i: int) -> int:
        return p[i - 1] if i <= len(p) else i

    def compose(self, a, b):
        n = max(len(a), len(b))
        return _canon_perm(self.apply(a, self.apply(b, i)) for i in range(1, n + 1))

    def inverse(self, a):
        inv = [0] * len(a)
        for i, img in enumerate(a, start=1):
            inv[img - 1] = i
        return tuple(inv)

    def distance(self, a, b):
        # Cayley distance: support size minus number of cycles of a^{-1} b
        c = self.compose(self.inverse(a), b)
        seen = set()
        moves = 0
        for i in range(1, len(c) + 1):
            if i in seen:
                continue
            length = 0
            j = i
            while j not in seen:
                seen.add(j)
                j = self.apply(c, j)
                length += 1
            moves += length - 1
        return moves

    def encode(self, a):
        return "p:[" + ",".join(str(x) for x in a) + "]"

    def ball(self, r, support=None):
        support = self.ball_support if support is None else support
        self._check_cap(math.factorial(support))
        elems = frozenset(
            _canon_perm(p)
            for p in itertools.permutations(range(1, support + 1))
            if self.distance((), _canon_perm(p)) <= r
        )
        return Ball(int(r), elems)

    def random_element(self, rng, scale=6):
        return _canon_perm(int(x) + 1 for x in rng.permutation(scale))

    def default_folner_set(self, n):
        if n > self.max_degree:
            raise SizeCapError(f"S_{n} enumeration refused above degree {self.max_degree}")
        self._check_cap(math.factorial(n))
        return frozenset(_canon_perm(p) for p in itertools.permutations(range(1, n + 1)))


# ----------------------------------------------------------------------------
# Z^2 extended by the dihedral point group D4
# ----------------------------------------------------------------------------

_ROT = np.array([[0, -1], [1, 0]], dtype=np.int64)
_FLIP = np.array([[1, 0], [0, -1]], dtype=np.int64)
D4 = tuple(
    [np.linalg.matrix_power(_ROT, j) for j in range(4)]
    + [np.linalg.matrix_power(_ROT, j) @ _FLIP for j in range(4)]
)


def _d4_index(m: np.ndarray) -> int:
    for k, r in enumerate(D4):
        if np.array_equal(r, m):
            return k
    raise AssertionError("matrix not in D4")


_D4_MUL = tuple(tuple(_d4_index(D4[a] @ D4[b]) for b in range(8)) for a in range(8))
_D4_INV = tuple(_d4_index(D4[a].T) for a in range(8))


@dataclass(frozen=True)
class LatticeDihedral(Group):
    """Z^2 with rotations and reflections of the square lattice.

    Element ``((i, j), k)`` is the affine map ``t -> D4[k] @ t + (i, j)``.
    The metric is ``max(|z - z'|_inf, [k != k'])``.
    """

    max_elements: int = DEFAULT_MAX_ELEMENTS
    family: str = field(default="lattice_dihedral", init=False)
    d: int = field(default=2, init=False)

    @property
    def identity(self):
        return ((0, 0), 0)

    def compose(self, a, b):
        (z1, k1), (z2, k2) = a, b
        r = D4[k1]
        return (
            (z1[0] + int(r[0, 0] * z2[0] + r[0, 1] * z2[1]),
             z1[1] + int(r[1, 0] * z2[0] + r[1, 1] * z2[1])),
            _D4_MUL[k1][k2],
        )

    def inverse(self, a):
        z, k = a
        ki = _D4_INV[k]
        r = D4[ki]
        return ((-int(r[0, 0] * z[0] + r[0, 1] * z[1]), -int(r[1, 0] * z[0] + r[1, 1] * z[1])), ki)

    def distance(self, a, b):
        (z1, k1), (z2, k2) = a, b
        return max(abs(z1[0] - z2[0]), abs(z1[1] - z2[1]), int(k1 != k2))

    def encode(self, a):
        (i, j), k = a
        return f"dh:({i},{j})|{k}"

    def ball_size(self, r):
        r = int(r)
        if r < 0:
            return 0
        return 1 if r == 0 else 8 * (2 * r + 1) ** 2

    def ball(self, r):
        r = int(r)
        if r < 0:
            raise ValueError("radius must be nonnegative")
        self._check_cap(self.ball_size(r))
        if r == 0:
            return Ball(0, frozenset([self.identity]))
        return Ball(r, frozenset((z, k) for z in box(2, r) for k in range(8)))

    def random_element(self, rng, scale=5):
        z = tuple(int(x) for x in rng.integers(-scale, scale + 1, size=2))
        return (z, int(rng.integers(8)))

    def default_folner_set(self, n):
        return self.ball(n).elements

    def translations(self, elements) -> frozenset:
        """Elements of the translation subgroup contained in ``elements``."""
        return frozenset(e for e in elements if e[1] == 0)

    def site_maps(self, elements):
        elements = list(elements)
        z = np.array([e[0] for e in elements], dtype=np.int64).reshape(-1, 2)
        lin = np.stack([D4[e[1]] for e in elements]) if elements else np.zeros((0, 2, 2), np.int64)
        return z, lin


# ----------------------------------------------------------------------------
# Følner sequences and exact diagnostics
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class FolnerSequence:
    """A rule ``n -> A_n`` on a group; defaults to the group's canonical sets."""

    group: Group
    set_generator: Callable[[int], Iterable] | None = None

    def __call__(self, n: int) -> frozenset:
        return folner_set(self, n)


def folner_set(seq: FolnerSequence, n: int) -> frozenset:
    if n < 1:
        raise ValueError("Følner index must be >= 1")
    if seq.set_generator is None:
        return seq.group.default_folner_set(n)
    elems = frozenset(seq.set_generator(n))
    seq.group._check_cap(len(elems))
    if not elems:
        raise ValueError(f"Følner set A_{n} is empty")
    return elems


def ball(group: Group, r: int) -> Ball:
    return group.ball(r)


def translate(group: Group, phi, elements: Iterable) -> frozenset:
    """The left translate ``phi A``."""
    return frozenset(group.compose(phi, a) for a in elements)


def inverse_set(group: Group, elements: Iterable) -> frozenset:
    return frozenset(group.inverse(a) for a in elements)


def _is_lattice_set(group: Group) -> bool:
    return isinstance(group, Lattice)


def _lattice_product(d: int, a: frozenset, b: frozenset) -> frozenset:
    """Minkowski sum of two finite subsets of Z^d via indicator convolution."""
    pa = np.array(list(a), dtype=np.int64).reshape(-1, d)
    pb = np.array(list(b), dtype=np.int64).reshape(-1, d)
    lo_a, lo_b = pa.min(0), pb.min(0)
    ga = np.zeros(tuple(pa.max(0) - lo_a + 1), dtype=np.float64)
    gb = np.zeros(tuple(pb.max(0) - lo_b + 1), dtype=np.float64)
    ga[tuple((pa - lo_a).T)] = 1.0
    gb[tuple((pb - lo_b).T)] = 1.0
    hits = np.argwhere(fftconvolve(ga, gb) > 0.5) + lo_a + lo_b
    return frozenset(tuple(int(x) for x in row) for row in hits)


def product_set(group: Group, a: Iterable, b: Iterable) -> frozenset:
    """The set product ``AB = {ab : a in A, b in B}``, exact."""
    a, b = frozenset(a), frozenset(b)
    if _is_lattice_set(group) and len(a) * len(b) > 50_000:
        return _lattice_product(group.d, a, b)
    group._check_cap(len(a) * len(b))
    return frozenset(group.compose(x, y) for x in a for y in b)


def folner_ratio(seq: FolnerSequence, n: int, phi) -> float:
    """``|A_n ∩ phi A_n| / |A_n|`` by exact set intersection."""
    a = folner_set(seq, n)
    return len(a & translate(seq.group, phi, a)) / len(a)


def _nested_up_to(seq: FolnerSequence, n: int) -> bool:
    prev = folner_set(seq, 1)
    for k in range(2, n + 1):
        cur = folner_set(seq, k)
        if not prev <= cur:
            return False
        prev = cur
    return True


def tempered_constant(seq: FolnerSequence, n: int) -> float:
    """``|U_{k<n} A_k^{-1} A_n| / |A_n|`` by exact enumeration."""
    if n < 2:
        raise ValueError("tempered constant needs n >= 2")
    g = seq.group
    an = folner_set(seq, n)
    # for nested sequences the union is attained at k = n - 1
    ks = [n - 1] if _nested_up_to(seq, n - 1) else range(1, n)
    union = set()
    for k in ks:
        union |= product_set(g, inverse_set(g, folner_set(seq, k)), an)
    return len(union) / len(an)


def boundary_ratio(seq: FolnerSequence, n: int, k: int) -> float:
    """``|A_n △ B_k A_n| / |A_n|`` with ``B_k A_n`` the exact set product."""
    an = folner_set(seq, n)
    if k == 0:
        return 0.0
    bk = seq.group.ball(k).elements
    return len(an ^ product_set(seq.group, bk, an)) / len(an)


def intersection_ratio(seq: FolnerSequence, n: int, k: int) -> float:
    """``|A_n ∩ B_k A_n| / |A_n|``."""
    an = folner_set(seq, n)
    bk = seq.group.ball(k).elements
    return len(an & product_set(seq.group, bk, an)) / len(an)


def metric_growth_constant(group: Group, n_max: int = 32) -> float:
    """``max_{1<=n<=n_max} |B_{n+1}\\B_n| / |B_n\\B_{n-1}|``.

    Finite for every supported group; reported, not thresholded.
    """
    sizes = [group.ball_size(r) for r in range(n_max + 2)]
    shells = [sizes[0]] + [sizes[r] - sizes[r - 1] for r in range(1, len(sizes))]
    return max(shells[r + 1] / shells[r] for r in range(1, n_max + 1))


def default_sequence(group: Group) -> FolnerSequence:
    return FolnerSequence(group)
