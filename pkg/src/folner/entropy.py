"""Empirical entropy of finite-alphabet processes on Z and its normal limit."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .diagnostics import (
    build_report,
    parallel_map_blocks,
    replicate_seeds,
)
from .errors import DegenerateVarianceError, ZeroProbabilityError
from .groups import FolnerSequence, Lattice, folner_set
from .processes import MarkovChain


def _interval(n: int) -> list:
    return [(t,) for t in range(1, n + 1)]


def interval_sequence() -> FolnerSequence:
    """``A_n = {1, ..., n}`` on Z."""
    return FolnerSequence(Lattice(1), _interval)


@dataclass(frozen=True, eq=False)
class PartitionProcess:
    """Symbols ``S_t`` of a finite-alphabet stationary source on Z."""

    source: MarkovChain

    @property
    def k(self) -> int:
        return self.source.k

    def conditional(self, given: dict, site: int = 0) -> np.ndarray:
        """Law of ``S_site`` given ``S_A``; rows sum to 1 within 1e-12."""
        row = self.source.conditional(given, site)
        if abs(row.sum() - 1.0) > 1e-12:
            raise AssertionError("conditional law does not sum to 1")
        return row

    @property
    def entropy_rate(self) -> float:
        return self.source.entropy_rate


@dataclass(frozen=True)
class EntropyEstimate:
    h_n: float
    n: int
    log_prob: float

    def to_dict(self) -> dict:
        return asdict(self)


def _contiguous_sites(seq: FolnerSequence, n: int) -> tuple[int, int, int]:
    sites = sorted(t[0] for t in folner_set(seq, n))
    lo, hi = sites[0], sites[-1]
    if hi - lo + 1 != len(sites):
        raise ValueError("entropy needs contiguous Følner sets on Z")
    return lo, hi, len(sites)


def site_log_probs(proc: PartitionProcess, values: np.ndarray, order: str = "natural") -> np.ndarray:
    """Per-site chain-rule terms ``log P(S_t | S_{earlier sites in the window})``."""
    if order == "natural":
        return proc.source.log_prob_path(values)
    if order == "reversed":
        return proc.source.reversed().log_prob_path(values[:, ::-1])[:, ::-1]
    raise ValueError(f"unknown order {order!r}")


def entropy_values(proc: PartitionProcess, seq: FolnerSequence, n: int, seeds, order: str = "natural") -> np.ndarray:
    """``h_n = -(1/|A_n|) log P(S_{A_n})`` for every seed."""
    lo, hi, count = _contiguous_sites(seq, n)
    vals = proc.source.sample_interval(lo, hi, seeds)
    lp = site_log_probs(proc, vals, order)
    if not np.all(np.isfinite(lp)):
        raise ZeroProbabilityError("observed window has probability zero")
    return np.array([-math.fsum(row) / count for row in lp])


def empirical_entropy(proc: PartitionProcess, seq: FolnerSequence, n: int, seed: int,
                      order: str = "natural") -> EntropyEstimate:
    lo, hi, count = _contiguous_sites(seq, n)
    vals = proc.source.sample_interval(lo, hi, [seed])
    lp = site_log_probs(proc, vals, order)[0]
    if not np.all(np.isfinite(lp)):
        raise ZeroProbabilityError("observed window has probability zero")
    total = math.fsum(lp)
    return EntropyEstimate(-total / count, n, total)


# ----------------------------------------------------------------------------
# analytic variance of the centred log-likelihood terms
# ----------------------------------------------------------------------------


def _block_chain(chain: MarkovChain):
    """Chain on (q+1)-tuples, its stationary law and ``-log P(last | first q)``."""
    q, k = chain.order, chain.k
    nb = k ** (q + 1)
    pi = chain.lifted_stationary
    P = chain.transition
    nu = np.zeros(nb)
    g = np.zeros(nb)
    Q = np.zeros((nb, nb))
    for w in range(nb):
        row, x = divmod(w, k)
        nu[w] = pi[row] * P[row, x]
        g[w] = -math.log(P[row, x]) if P[row, x] > 0 else 0.0
        nxt_row = w % (k**q)
        for y in range(k):
            Q[w, nxt_row * k + y] = P[nxt_row, y]
    return Q, nu, g


def entropy_eta_sq(chain: MarkovChain) -> float:
    """``sum_j Cov(g(W_0), g(W_j))`` via the fundamental matrix."""
    Q, nu, g = _block_chain(chain)
    gbar = g - nu @ g
    n = len(nu)
    Z = np.linalg.inv(np.eye(n) - Q + np.outer(np.ones(n), nu))
    return float(2.0 * nu @ (gbar * (Z @ gbar)) - nu @ (gbar * gbar))


def entropy_eta_sq_truncated(chain: MarkovChain, lags: int) -> float:
    """Same sum truncated at ``|j| <= lags``; a cross-check of the closed form."""
    Q, nu, g = _block_chain(chain)
    gbar = g - nu @ g
    total = nu @ (gbar * gbar)
    v = gbar.copy()
    for _ in range(lags):
        v = Q @ v
        total += 2.0 * nu @ (gbar * v)
    return float(total)


@dataclass(frozen=True, eq=False)
class EntropyCLTResult:
    status: str  # PASS | FAIL | SKIP | REPORT
    eta_sq: float | None
    reports: tuple = ()
    flag: str | None = None

    def to_dict(self) -> dict:
        return {"status": self.status, "eta_sq": self.eta_sq, "flag": self.flag,
                "reports": [r.to_dict() for r in self.reports]}


def entropy_clt_check(proc: PartitionProcess, n_grid, R: int, base_seed: int = 0,
                      standardization: str = "analytic", seq: FolnerSequence | None = None,
                      order: str = "natural", threshold: float | None = None,
                      workers: int = 1) -> EntropyCLTResult:
    """Standardized ``sqrt(|A_n|) (h_n - h) / eta`` ensembles over ``n_grid``.

    A degenerate variance returns status SKIP rather than raising. With a
    ``threshold`` the status is PASS iff every KS statistic is below it.
    """
    seq = interval_sequence() if seq is None else seq
    h = proc.entropy_rate
    eta_sq = entropy_eta_sq(proc.source)
    if standardization == "analytic" and eta_sq < 1e-14:
        return EntropyCLTResult("SKIP", eta_sq, flag="degenerate eta: entropy of every window is constant")
    reports = []
    for n in n_grid:
        _, _, count = _contiguous_sites(seq, n)
        seeds = replicate_seeds(base_seed, R)
        raw = parallel_map_blocks(lambda b: entropy_values(proc, seq, n, b, order), seeds, workers)
        scale = math.sqrt(count)
        if standardization == "analytic":
            eta = math.sqrt(eta_sq)
        elif standardization == "empirical":
            eta = float(scale * raw.std(ddof=1))
        else:
            raise ValueError(f"unknown standardization {standardization!r}")
        try:
            rep = build_report(
                raw, scale, h, "analytic", eta, standardization, n=n, model=proc.source.family,
                statistic="empirical_entropy", scheme="haar", base_seed=base_seed, count=float(count),
                extra={"entropy_rate_oracle": h, "order": order, "eta_sq_oracle": eta_sq},
            )
        except DegenerateVarianceError:
            return EntropyCLTResult("SKIP", eta_sq, flag="degenerate eta: replicate spread is zero")
        reports.append(rep)
    if threshold is None:
        status = "REPORT"
    else:
        status = "PASS" if all(r.ks < threshold for r in reports) else "FAIL"
    return EntropyCLTResult(status, eta_sq, tuple(reports))


# ----------------------------------------------------------------------------
# conditional-dependence decay
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RhoResult:
    value: float
    m: int
    horizon: int
    certified_zero: bool
    lower_bound_only: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _log_conditional(chain: MarkovChain, past: tuple, x: int) -> float:
    cond = chain.conditional({-(i + 1): past[-(i + 1)] for i in range(len(past))}, 0)
    return math.log(cond[x])


def rho_m(proc: PartitionProcess, m: int, horizon: int = 6) -> RhoResult:
    """``sup_A ||log P(S_0|S_A) - log P(S_0|S_{A ∩ B_m})||_2`` over past intervals.

    ``A`` ranges over ``{-j, ..., -1}`` for ``j <= horizon``. For a source whose
    transitions depend on the last ``q`` symbols the sup is attained by
    ``j = q``, so the result is exact when ``horizon >= q``.
    """
    chain = proc.source
    q = chain.effective_order
    best = 0.0
    for j in range(1, horizon + 1):
        keep = min(j, m)
        second = 0.0
        for config in itertools.product(range(chain.k), repeat=j + 1):
            past, x = config[:j], config[j]
            p = chain.joint_prob({t - j: s for t, s in enumerate(config)})
            if p == 0:
                continue
            full = _log_conditional(chain, past, x)
            cut = _log_conditional(chain, past[j - keep:], x) if keep else math.log(chain.stationary[x])
            second += p * (full - cut) ** 2
        best = max(best, math.sqrt(second))
    certified = m >= q and best < 1e-10
    return RhoResult(0.0 if certified else best, m, horizon, certified, horizon < q)


@dataclass(frozen=True)
class MixingCertificate:
    finite: bool
    partial_sum: float
    ratio_at_horizon: float
    witness_m: int

    def to_dict(self) -> dict:
        return asdict(self)


def mixing_certificate(proc: PartitionProcess, eps: float = 2.0, horizon: int = 400) -> MixingCertificate:
    """Ratio-test certificate that ``sum_i |B_i| min_m (rho_m + alpha(i-m)^p)`` converges.

    Uses ``rho_q = 0`` (q the effective order) and the geometric mixing oracle.
    """
    chain = proc.source
    q = chain.effective_order
    rho = rho_m(proc, q, horizon=max(q, 1))
    if not rho.certified_zero:
        return MixingCertificate(False, math.inf, math.nan, q)
    oracle = chain.mixing
    p = eps / (2.0 + eps)
    group = Lattice(1)
    terms = [group.ball_size(i) * oracle.alpha(max(i - q, 0)) ** p for i in range(horizon + 2)]
    ratio = terms[-1] / terms[-2] if terms[-2] > 0 else 0.0
    return MixingCertificate(ratio < 1.0, float(math.fsum(terms)), float(ratio), q)
