"""Counter-based random numbers keyed on ``(seed, stream, site)``.

Every random draw used by a process model is a pure function of the seed,
a stream identifier, and the integer code of the site it belongs to. Growing
a sampling window therefore never changes values already drawn, and
transformed copies of a field can be produced by re-indexing.

The mixer is the SplitMix64 finalizer applied twice with a seed-dependent key.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

# stream identifiers; distinct purposes never share a stream
NOISE = 1
CLASSES = 2
EDGES = 3
POINTS = 4
SCHEME = 5
ROTATIONS = 6
MARKOV = 7
ANCHOR = 8


def _mix_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def stream_key(seed: int, stream: int) -> int:
    """64-bit key for one (seed, stream) pair."""
    return _mix_int(_mix_int((seed * _GOLDEN + stream) & _MASK) + _GOLDEN)


def derive_seed(base_seed: int, index: int) -> int:
    """Seed for replicate ``index``; independent of scheduling order."""
    return _mix_int(_mix_int(base_seed & _MASK) ^ ((index + 1) * _GOLDEN)) >> 1


def _zigzag(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.int64)
    return ((t << 1) ^ (t >> 63)).astype(np.uint64)


def site_codes(sites: np.ndarray) -> np.ndarray:
    """Injective uint64 codes for integer lattice sites.

    ``sites`` has shape ``(..., d)``. Packing is exact for d <= 3 within the
    supported coordinate range; higher dimensions fall back to hashing.
    """
    sites = np.asarray(sites, dtype=np.int64)
    d = sites.shape[-1]
    if d == 1:
        return _zigzag(sites[..., 0])
    if d == 2:
        if np.abs(sites).max(initial=0) >= 1 << 30:
            raise ValueError("lattice coordinate out of range for site coding")
        return (_zigzag(sites[..., 0]) << np.uint64(32)) | _zigzag(sites[..., 1])
    if d == 3:
        if np.abs(sites).max(initial=0) >= 1 << 19:
            raise ValueError("lattice coordinate out of range for site coding")
        z = [_zigzag(sites[..., i]) for i in range(3)]
        return (z[0] << np.uint64(42)) | (z[1] << np.uint64(21)) | z[2]
    code = _zigzag(sites[..., 0])
    with np.errstate(over="ignore"):
        for i in range(1, d):
            code = _mix(code + np.uint64(_GOLDEN)) ^ _zigzag(sites[..., i])
    return code


def _keys(seeds, stream: int) -> np.ndarray:
    seeds = np.atleast_1d(np.asarray(seeds, dtype=object))
    return np.array([stream_key(int(s), stream) for s in seeds], dtype=np.uint64)


def raw_bits(seeds, stream: int, codes: np.ndarray) -> np.ndarray:
    """Hash ``codes`` under every seed; shape ``(len(seeds),) + codes.shape``."""
    codes = np.asarray(codes, dtype=np.uint64)
    keys = _keys(seeds, stream).reshape((-1,) + (1,) * codes.ndim)
    with np.errstate(over="ignore"):
        x = _mix((codes * np.uint64(_GOLDEN)) ^ keys)
        x = _mix(x + keys)
    return x


def uniforms(seeds, stream: int, codes: np.ndarray) -> np.ndarray:
    """Uniform draws in the open interval (0, 1), 53 bits of resolution."""
    x = raw_bits(seeds, stream, codes)
    return ((x >> _S11).astype(np.float64) + 0.5) * 2.0**-53


def uniform(seed: int, stream: int, codes: np.ndarray) -> np.ndarray:
    """Single-seed convenience wrapper around :func:`uniforms`."""
    return uniforms([seed], stream, codes)[0]


def transform_noise(u: np.ndarray, noise: str, p: float = 0.1) -> np.ndarray:
    """Map uniforms to standardized (mean 0, variance 1) noise."""
    if noise == "gaussian":
        return ndtri(u)
    if noise == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    if noise == "uniform":
        return (u - 0.5) * np.sqrt(12.0)
    if noise == "bernoulli":
        return ((u < p).astype(np.float64) - p) / np.sqrt(p * (1.0 - p))
    if noise == "ones":
        return np.ones_like(u)
    raise ValueError(f"unknown noise distribution {noise!r}")


def generator(seed: int, stream: int) -> np.random.Generator:
    """Sequential generator for scheme realizations (not site-keyed)."""
    return np.random.default_rng(np.random.SeedSequence([seed & _MASK, stream]))
