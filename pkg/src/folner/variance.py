"""Asymptotic variances, mixing tails, Berry-Esseen bounds and oracles."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .averaging import SamplingScheme, Statistic, element_values
from .errors import (
    DegenerateVarianceError,
    DivergentTailError,
    MissingMomentError,
    NegativeVarianceError,
    TruncationError,
    UnsupportedModelError,
)
from .groups import FolnerSequence, Group, Lattice, LatticeDihedral, box, folner_set
from .processes import MAField, MixingOracle, noise_moments

log = logging.getLogger(__name__)

NEGATIVE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class VarianceEstimate:
    eta_sq: float
    m: int | None
    method: str
    raw: float | None = None
    clamped: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _checked(value: float, m: int | None, method: str) -> VarianceEstimate:
    if value < -NEGATIVE_TOLERANCE:
        raise NegativeVarianceError(f"plugin variance {value:.3g} is below -{NEGATIVE_TOLERANCE:g}")
    if value < 0:
        log.warning("plugin variance %.3g clamped to 0", value)
        return VarianceEstimate(0.0, m, method, raw=value, clamped=True)
    return VarianceEstimate(float(value), m, method, raw=value)


# ----------------------------------------------------------------------------
# plugin truncated estimator
# ----------------------------------------------------------------------------


def eta_truncated_values(f: Statistic, model, seq: FolnerSequence, n: int, m: int, seeds,
                         center: float = 0.0) -> np.ndarray:
    """Plugin ``sum_{phi in B_m} Cov^(f(X), f(phi X))`` for every seed.

    The covariance at lag ``phi`` averages ``f(psi X) f(psi phi X)`` over
    ``psi in A_{n-m}``, so every evaluation stays inside ``A_n``. Only box
    sequences on Z^d are supported; ``center`` is subtracted from ``f``.
    """
    if m > n:
        raise TruncationError(f"truncation radius {m} exceeds scale {n}")
    if not isinstance(seq.group, Lattice) or seq.set_generator is not None:
        raise UnsupportedModelError("plugin variance needs box Følner sets on Z^d")
    d = seq.group.d
    elems = sorted(folner_set(seq, n))
    vals = element_values(f, model, seq.group, elems, seeds) - center
    side = 2 * n + 1
    grid = vals.reshape((len(vals),) + (side,) * d)
    inner = 2 * (n - m) + 1
    base = grid[(slice(None),) + (slice(m, m + inner),) * d].reshape(len(vals), -1)
    total = np.zeros(len(vals))
    for lag in sorted(box(d, m)):
        sl = tuple(slice(m + t, m + t + inner) for t in lag)
        shifted = grid[(slice(None),) + sl].reshape(len(vals), -1)
        total += (base * shifted).mean(axis=1)
    return total


def eta_truncated(f: Statistic, model, seq: FolnerSequence, n: int, m: int, seed: int,
                  center: float = 0.0) -> VarianceEstimate:
    value = float(eta_truncated_values(f, model, seq, n, m, [seed], center)[0])
    return _checked(value, m, "plugin-truncated")


# ----------------------------------------------------------------------------
# mixing tails and hypotheses
# ----------------------------------------------------------------------------


def _shell(group: Group, i: int) -> int:
    return group.ball_size(i + 1) - group.ball_size(i)


def tau_tail(mixing: MixingOracle, eps: float, r: int, group: Group, horizon: int = 100_000) -> float:
    """``sum_{i >= r} |B_{i+1} \\ B_i| alpha(i)^{eps/(2+eps)}``.

    Exact-zero oracles give a finite sum; geometric oracles are summed until
    terms fall below double precision, after a ratio test at the cutoff.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    power = eps / (2.0 + eps)
    if mixing.kind == "none":
        raise DivergentTailError("no mixing information available")
    if mixing.kind == "exact_zero":
        return float(sum(_shell(group, i) * mixing.alpha(i) ** power for i in range(r, mixing.radius + 1)))
    terms = []
    total = 0.0
    i = r
    while i < r + horizon:
        term = _shell(group, i) * mixing.alpha(i) ** power
        terms.append(term)
        total += term
        if term <= 1e-18 * max(total, 1e-300) and i > r + 10:
            return float(math.fsum(terms))
        i += 1
    ratio = terms[-1] / terms[-2] if terms[-2] > 0 else 0.0
    raise DivergentTailError(f"tail not summable by horizon {horizon} (last ratio {ratio:.6f})")


@dataclass(frozen=True)
class HypothesisReport:
    regime: str  # H1 | H2 | unverifiable
    witness: int | None = None
    eps: float | None = None
    certificate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def hypothesis_check(f: Statistic, mixing: MixingOracle, group: Group, horizon: int = 2000) -> HypothesisReport:
    """Decide which of the two mixing hypotheses the oracle certifies."""
    p = f.moment_order
    if p < 2:
        return HypothesisReport("unverifiable", certificate={"reason": "second moment not available"})
    oracle = mixing.widened(f.radius)
    if oracle.kind == "exact_zero":
        return HypothesisReport("H1", witness=oracle.radius + 1, certificate={"alpha_zero_beyond": oracle.radius})
    if oracle.kind == "geometric" and p > 2:
        eps = min(p - 2.0, 2.0)
        power = eps / (2.0 + eps)
        ratios = [
            (_shell(group, i + 1) * oracle.alpha(i + 1) ** power) / (_shell(group, i) * oracle.alpha(i) ** power)
            for i in (horizon - 1, horizon)
        ]
        limit = oracle.rate**power
        if max(ratios) < 1.0:
            return HypothesisReport(
                "H2", eps=eps,
                certificate={"ratio_at_horizon": max(ratios), "limit_ratio": limit, "horizon": horizon},
            )
    return HypothesisReport("unverifiable", certificate={"reason": f"mixing kind {oracle.kind!r}, moment {p}"})


# ----------------------------------------------------------------------------
# Berry-Esseen bound
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BEBound:
    value: float
    regime: str
    terms: dict

    def to_dict(self) -> dict:
        return {"value": self.value, "regime": self.regime, "terms": dict(self.terms)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def be_bound(regime: str, count: int, ball_size: int, moments: dict, boundary: float | None = None,
             tau_b: float | None = None, tau_0: float | None = None, intersection: float | None = None,
             eps: float | None = None) -> BEBound:
    """Evaluate the Berry-Esseen bound with unit order constants.

    ``moments`` maps an order p to ``s_p = ||f(X)/eta||_p``.
    H1 needs ``s_2, s_4`` and ``boundary = |A_n △ B_k A_n| / |A_n|``.
    H2 needs ``s_{2+eps}, s_{4+2eps}``, ``tau_b``, ``tau_0`` and
    ``intersection = |A_n ∩ B_b A_n| / |A_n|``.
    """

    def need(p):
        if p not in moments or moments[p] is None or not math.isfinite(moments[p]):
            raise MissingMomentError(f"moment s_{p:g} is required for regime {regime}")
        return float(moments[p])

    root = math.sqrt(count)
    if regime == "H1":
        s2, s4 = need(2), need(4)
        if boundary is None:
            raise ValueError("H1 bound needs the boundary ratio")
        k1 = s4**3 * ball_size**2
        k2 = s2**2
        terms = {"kappa1": k1, "kappa2": k2, "kappa_term": k1 / root, "boundary_term": k2 * boundary}
        return BEBound(terms["kappa_term"] + terms["boundary_term"], "H1", terms)
    if regime == "H2":
        if eps is None:
            raise ValueError("H2 bound needs eps")
        s_a, s_b = need(2 + eps), need(4 + 2 * eps)
        if tau_b is None or tau_0 is None or intersection is None:
            raise ValueError("H2 bound needs tau_b, tau_0 and the intersection ratio")
        k3 = s_a**2
        k4 = s_b**3 * tau_0
        terms = {
            "kappa3": k3, "kappa4": k4,
            "tail_term": k3 * tau_b,
            "kappa_term": k4 * ball_size / root,
            "boundary_term": k3 * (1.0 - intersection),
        }
        return BEBound(terms["tail_term"] + terms["kappa_term"] + terms["boundary_term"], "H2", terms)
    raise ValueError(f"unknown regime {regime!r}")


def be_bound_h1(seq: FolnerSequence, n: int, k: int, s2: float, s4: float) -> BEBound:
    from .groups import boundary_ratio

    count = len(folner_set(seq, n))
    return be_bound("H1", count, seq.group.ball_size(k), {2: s2, 4: s4}, boundary=boundary_ratio(seq, n, k))


# ----------------------------------------------------------------------------
# sampling-scheme variance
# ----------------------------------------------------------------------------


def scheme_eta_sq(eta_sq: float, lag0: float, count: int, scheme: SamplingScheme) -> float:
    """Limit variance of ``sqrt(|A_n|)`` times the randomized average.

    ``lag0`` is ``Var f(X)``; the extra terms come from the scheme's
    collision weights on the diagonal.
    """
    if scheme.kind == "haar":
        return eta_sq
    if scheme.kind == "poisson":
        return eta_sq + lag0 / scheme.param
    m = scheme.size(count)
    if scheme.kind == "with_replacement":
        return count / m * lag0 + (m - 1) / m * eta_sq
    if count == 1:
        return lag0
    return lag0 * count / m + (eta_sq - lag0) * count * (m - 1) / (m * (count - 1))


# ----------------------------------------------------------------------------
# SBM triangle density
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SBMVariance:
    E: np.ndarray
    eta_sq: float
    expected_density: float
    degenerate: bool

    def to_dict(self) -> dict:
        return {"E": [float(x) for x in self.E], "eta_sq": self.eta_sq,
                "expected_density": self.expected_density, "degenerate": self.degenerate}


def sbm_analytic_variance(pi, P) -> SBMVariance:
    """``E_i = sum_j pi_j P_ij sum_k pi_k P_ik P_jk``; ``eta^2 = sum_i pi_i (1-pi_i) E_i^2``."""
    pi = np.asarray(pi, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    inner = (P * pi[None, :]) @ P.T  # inner[i, j] = sum_k pi_k P_ik P_jk
    E = (P * inner) @ pi
    eta_sq = float(np.sum(pi * (1.0 - pi) * E**2))
    density = float(pi @ E)
    return SBMVariance(E, eta_sq, density, degenerate=eta_sq < 1e-16)


def require_nondegenerate(eta_sq: float, floor: float = 1e-8) -> float:
    eta = math.sqrt(max(eta_sq, 0.0))
    if eta < floor:
        raise DegenerateVarianceError(f"standardizing eta {eta:.3g} below {floor:g}")
    return eta


# ----------------------------------------------------------------------------
# covariance oracle for polynomial statistics of moving-average fields
# ----------------------------------------------------------------------------


def _cum4(model: MAField, sites) -> float:
    kappa4 = noise_moments(model.noise)[2]
    if kappa4 == 0.0:
        return 0.0
    table = dict(model.coeffs)
    a = sites[0]
    total = 0.0
    # X_t loads noise eps_s with weight c_{s-t}
    for u, c in model.coeffs:
        s = tuple(x + y for x, y in zip(a, u))
        prod = c
        for t in sites[1:]:
            prod *= table.get(tuple(x - y for x, y in zip(s, t)), 0.0)
        total += prod
    return kappa4 * total


def _cov_sites(model: MAField, a, c) -> float:
    return model.covariance(tuple(y - x for x, y in zip(a, c)))


def monomial_covariance(model: MAField, left: list, right: list) -> float:
    """``Cov(prod X_left, prod X_right)`` for degree-1 or degree-2 monomials."""
    if noise_moments(model.noise)[0] != 0.0:
        raise UnsupportedModelError("covariance oracle needs centred noise")
    if len(left) == 1 and len(right) == 1:
        return _cov_sites(model, left[0], right[0])
    if len(left) == 2 and len(right) == 2:
        (a, b), (c, d) = left, right
        return (_cov_sites(model, a, c) * _cov_sites(model, b, d)
                + _cov_sites(model, a, d) * _cov_sites(model, b, c)
                + _cum4(model, [a, b, c, d]))
    raise UnsupportedModelError("covariance oracle supports matching degree 1 or 2 only")


def _mapped(group: Group, element, offset):
    z, lin = group.site_maps([element])
    return tuple(int(x) for x in lin[0] @ np.array(offset) + z[0])


def statistic_covariance(f: Statistic, model: MAField, group: Group, element) -> float:
    """``Cov(f(X), f(phi X))`` from the statistic's monomial description."""
    if f.monomials is None:
        raise UnsupportedModelError(f"statistic {f.name!r} has no polynomial description")
    total = 0.0
    for ca, ia in f.monomials:
        left = [tuple(f.offsets[i]) for i in ia]
        for cb, ib in f.monomials:
            right = [_mapped(group, element, f.offsets[i]) for i in ib]
            total += ca * cb * monomial_covariance(model, left, right)
    return total


def _interaction_radius(f: Statistic, model: MAField) -> int:
    return 2 * f.radius + 2 * model.order


def eta_sq_oracle(f: Statistic, model: MAField, group: Group | None = None) -> float:
    """``sum_phi Cov(f(X), f(phi X))`` over the group with counting measure."""
    group = Lattice(model.d) if group is None else group
    reach = _interaction_radius(f, model)
    if isinstance(group, LatticeDihedral):
        elems = [(z, k) for z in sorted(box(2, reach)) for k in range(8)]
    else:
        elems = sorted(box(group.d, reach))
    return float(math.fsum(statistic_covariance(f, model, group, e) for e in elems))


@dataclass(frozen=True)
class SubgroupOracle:
    eta_sq_translations: float
    eta_sq_group: float
    beta_sq_minus_one: float

    def to_dict(self) -> dict:
        return asdict(self)


def subgroup_beta_oracle(f: Statistic, model: MAField) -> SubgroupOracle:
    """``beta^2 - 1`` for translations inside Z^2 x| D4, from covariances.

    Evaluates ``(1/eta^2) sum_{phi in H} mean_{psi in K} E[f(X)(f(phi X) - f(psi phi X))]``
    with ``K = D4`` carrying its uniform probability, and ``eta^2`` the
    variance with respect to counting measure on H times that probability.
    """
    if not model.is_isotropic():
        raise UnsupportedModelError("subgroup oracle needs a D4-invariant field")
    g = LatticeDihedral()
    reach = _interaction_radius(f, model)
    zs = sorted(box(2, reach))
    eta_h = math.fsum(statistic_covariance(f, model, g, (z, 0)) for z in zs)
    eta_g = math.fsum(statistic_covariance(f, model, g, (z, k)) for z in zs for k in range(8)) / 8.0
    diff = []
    for z in zs:
        for k in range(8):
            psi_phi = g.compose(((0, 0), k), (z, 0))
            diff.append(statistic_covariance(f, model, g, (z, 0)) - statistic_covariance(f, model, g, psi_phi))
    beta = math.fsum(diff) / 8.0 / eta_g
    return SubgroupOracle(eta_h, eta_g, beta)
