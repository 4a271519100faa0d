"""Monte Carlo ensembles, distances to normality, rate fits and tail checks."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from scipy.special import ndtr, ndtri
from statsmodels.stats.proportion import proportion_confint

from . import rng
from .averaging import (
    HAAR,
    SamplingScheme,
    Statistic,
    randomized_values,
    average_values,
    u_statistic_values,
)
from .errors import DegenerateVarianceError
from .groups import FolnerSequence, folner_set
from .processes import SBM

MIN_REPLICATES = 100
REPLICATE_BLOCK = 250
# 99th percentile of the KS statistic under the null at R = 2000
KS_99_R2000 = 0.0363


def replicate_seeds(base_seed: int, count: int, start: int = 0) -> np.ndarray:
    return np.array([rng.derive_seed(base_seed, i) for i in range(start, start + count)], dtype=np.uint64)


def parallel_map_blocks(fn: Callable[[np.ndarray], np.ndarray], seeds: np.ndarray, workers: int = 1) -> np.ndarray:
    """Apply ``fn`` to fixed-size seed blocks and concatenate in order.

    Block boundaries do not depend on ``workers``, so output is identical for
    any worker count.
    """
    blocks = [seeds[i:i + REPLICATE_BLOCK] for i in range(0, len(seeds), REPLICATE_BLOCK)]
    if workers <= 1 or len(blocks) == 1:
        parts = [fn(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, blocks))
    return np.concatenate(parts)


# ----------------------------------------------------------------------------
# distances
# ----------------------------------------------------------------------------


def normal_quantiles(R: int) -> np.ndarray:
    return ndtri((np.arange(1, R + 1) - 0.5) / R)


def wasserstein1_to_normal(values) -> float:
    """Quantile-coupling estimate ``(1/R) sum |x_(i) - Phi^{-1}((i - 1/2)/R)|``."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    if len(x) < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} values")
    return float(np.mean(np.abs(x - normal_quantiles(len(x)))))


def ks_statistic(values) -> float:
    return float(stats.kstest(np.asarray(values, dtype=np.float64), "norm").statistic)


def _ks_rows(x: np.ndarray) -> np.ndarray:
    x = np.sort(x, axis=1)
    R = x.shape[1]
    cdf = ndtr(x)
    i = np.arange(1, R + 1)
    return np.maximum((i / R - cdf).max(1), (cdf - (i - 1) / R).max(1))


def simulate_ks_null(R: int, trials: int = 10_000, seed: int = 0, quantile: float = 0.99) -> float:
    """Quantile of the KS statistic for ``R`` standard normal draws."""
    gen = rng.generator(seed, rng.SCHEME)
    out = np.concatenate([_ks_rows(gen.standard_normal((min(500, trials - i), R))) for i in range(0, trials, 500)])
    return float(np.quantile(out, quantile))


def simulate_w1_null(R: int, trials: int = 10_000, seed: int = 0, quantile: float = 0.99) -> float:
    gen = rng.generator(seed, rng.SCHEME)
    q = normal_quantiles(R)
    out = []
    for i in range(0, trials, 500):
        x = np.sort(gen.standard_normal((min(500, trials - i), R)), axis=1)
        out.append(np.abs(x - q).mean(1))
    return float(np.quantile(np.concatenate(out), quantile))


# ----------------------------------------------------------------------------
# ensembles
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnsembleReport:
    values: np.ndarray
    n: int
    R: int
    model: str
    statistic: str
    scheme: str
    base_seed: int
    count: float
    eta: float
    standardization: str
    center: float
    center_method: str
    w1: float
    ks: float
    ks_pvalue: float
    mean: float
    variance: float
    extra: dict = field(default_factory=dict)
    raw: np.ndarray | None = None

    def __post_init__(self):
        if self.R < MIN_REPLICATES:
            raise ValueError(f"ensembles need R >= {MIN_REPLICATES}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("ensemble contains non-finite values")

    def to_dict(self, include_values: bool = False) -> dict:
        out = {
            "n": self.n, "R": self.R, "model": self.model, "statistic": self.statistic,
            "scheme": self.scheme, "base_seed": self.base_seed, "count": self.count,
            "eta": self.eta, "standardization": self.standardization,
            "center": self.center, "center_method": self.center_method,
            "w1": self.w1, "ks": self.ks, "ks_pvalue": self.ks_pvalue,
            "mean": self.mean, "variance": self.variance, **self.extra,
        }
        if include_values:
            out["values"] = [float(v) for v in self.values]
        return out

    def values_csv(self) -> str:
        return "value\n" + "".join(f"{float(v)!r}\n" for v in self.values)

    def text(self) -> str:
        rows = [(k, v) for k, v in self.to_dict().items()]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v:.6g}" if isinstance(v, float) else f"{k:<{width}}  {v}" for k, v in rows)


def build_report(raw: np.ndarray, scale: float, center: float, center_method: str, eta: float,
                 standardization: str, **meta) -> EnsembleReport:
    if eta < 1e-8:
        raise DegenerateVarianceError(f"standardizing eta {eta:.3g} below 1e-8")
    values = scale * (raw - center) / eta
    extra = meta.pop("extra", {})
    if center_method == "grand_mean":
        extra = {**extra, "df_correction": True}
    return EnsembleReport(
        values=values, R=len(values), center=float(center), center_method=center_method,
        eta=float(eta), standardization=standardization,
        w1=wasserstein1_to_normal(values), ks=ks_statistic(values),
        ks_pvalue=float(stats.kstest(values, "norm").pvalue),
        mean=float(values.mean()), variance=float(values.var(ddof=1)), extra=extra, raw=raw, **meta,
    )


def raw_averages(model, statistic: Statistic, seq: FolnerSequence | None, n: int, seeds: np.ndarray,
                 scheme: SamplingScheme = HAAR, workers: int = 1) -> np.ndarray:
    """Unstandardized averages for the listed replicate seeds."""
    if isinstance(model, SBM):
        return parallel_map_blocks(lambda b: u_statistic_values(statistic, model, n, b), seeds, workers)
    if scheme.kind == "haar":
        return parallel_map_blocks(lambda b: average_values(statistic, model, seq, n, b), seeds, workers)
    return parallel_map_blocks(
        lambda b: randomized_values(statistic, model, seq, n, scheme, b)[0], seeds, workers)


def _scale(model, seq, n) -> tuple[float, float]:
    if isinstance(model, SBM):
        return math.sqrt(n), float(n)
    count = len(folner_set(seq, n))
    return math.sqrt(count), float(count)


def run_ensemble(model, statistic: Statistic, seq: FolnerSequence | None, n: int, R: int,
                 scheme: SamplingScheme = HAAR, standardization: str = "analytic", base_seed: int = 0,
                 eta: float | None = None, center: float | None = None, workers: int = 1,
                 plugin_m: int | None = None, model_tag: str | None = None) -> EnsembleReport:
    """Standardized replicate values ``sqrt(|A_n|) (F_n - center) / eta``.

    ``standardization``: ``analytic`` (``eta`` supplied), ``plugin`` (the
    mean of per-replicate truncated plugin estimates) or ``empirical``
    (replicate standard deviation). ``center=None`` uses the replicate grand
    mean and flags the lost degree of freedom.
    """
    if R < MIN_REPLICATES:
        raise ValueError(f"ensembles need R >= {MIN_REPLICATES}")
    seeds = replicate_seeds(base_seed, R)
    raw = raw_averages(model, statistic, seq, n, seeds, scheme, workers)
    scale, count = _scale(model, seq, n)
    center_method = "analytic"
    if center is None:
        center, center_method = float(raw.mean()), "grand_mean"
    if standardization == "analytic":
        if eta is None:
            raise ValueError("analytic standardization needs eta")
    elif standardization == "empirical":
        eta = float(scale * raw.std(ddof=1))
    elif standardization == "plugin":
        from .variance import eta_truncated_values

        m = plugin_m if plugin_m is not None else 2 * getattr(model, "order", 0) + 2 * statistic.radius
        est = eta_truncated_values(statistic, model, seq, n, m, seeds, center=center)
        eta = math.sqrt(max(float(est.mean()), 0.0))
    else:
        raise ValueError(f"unknown standardization {standardization!r}")
    return build_report(
        raw, scale, center, center_method, eta, standardization,
        n=n, model=model_tag or model.family, statistic=statistic.name, scheme=scheme.tag,
        base_seed=base_seed, count=count,
    )


# ----------------------------------------------------------------------------
# rates
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    counts: tuple
    distances: tuple
    slope: float
    slope_se: float
    intercept: float

    def to_dict(self) -> dict:
        return {"counts": list(self.counts), "distances": list(self.distances),
                "slope": self.slope, "slope_se": self.slope_se, "intercept": self.intercept}


def rate_fit(counts: Sequence[float], distances: Sequence[float]) -> RateFit:
    """Least-squares slope of ``log distance`` on ``log |A_n|``."""
    counts = np.asarray(counts, dtype=np.float64)
    distances = np.asarray(distances, dtype=np.float64)
    if len(counts) < 4:
        raise ValueError("rate fit needs at least 4 scales")
    if (distances <= 0).any():
        raise ValueError("distances must be positive to take logarithms")
    fit = stats.linregress(np.log(counts), np.log(distances))
    return RateFit(tuple(counts.tolist()), tuple(distances.tolist()), float(fit.slope),
                   float(fit.stderr), float(fit.intercept))


# ----------------------------------------------------------------------------
# concentration
# ----------------------------------------------------------------------------


def wilson_upper(successes: int, trials: int, alpha: float = 0.01) -> float:
    """Upper end of the two-sided Wilson interval at level ``1 - alpha``."""
    return float(proportion_confint(successes, trials, alpha=alpha, method="wilson")[1])


def concentration_bound(t: float, count: int, dobrushin: float, c_sum: float, tau_n: float = 1.0) -> float:
    """``2 exp(-(1 - Lambda) |A_n| t^2 / ((sum c)^2 tau_n))``."""
    return 2.0 * math.exp(-(1.0 - dobrushin) * count * t * t / (c_sum**2 * tau_n))


@dataclass(frozen=True, eq=False)
class ConcentrationReport:
    status: str  # PASS | FAIL | SKIP
    n: int
    R: int
    dobrushin: float
    rows: tuple
    raw: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"status": self.status, "n": self.n, "R": self.R, "dobrushin": self.dobrushin,
                "rows": [dict(r) for r in self.rows]}


def concentration_check(model, statistic: Statistic, seq: FolnerSequence, n: int, R: int, t_grid,
                        dobrushin: float, c_coeffs=(1.0,), tau_n: float = 1.0, base_seed: int = 0,
                        center: float = 0.0, scheme: SamplingScheme = HAAR, workers: int = 1) -> ConcentrationReport:
    """Empirical ``P(F_n - center >= t)`` against the exponential tail bound."""
    if dobrushin >= 1.0:
        return ConcentrationReport("SKIP", n, R, dobrushin, ())
    count = len(folner_set(seq, n))
    raw = raw_averages(model, statistic, seq, n, replicate_seeds(base_seed, R), scheme, workers)
    dev = raw - center
    c_sum = float(sum(c_coeffs))
    rows = []
    for t in t_grid:
        hits = int(np.count_nonzero(dev >= t))
        upper = wilson_upper(hits, R)
        bound = concentration_bound(t, count, dobrushin, c_sum, tau_n)
        rows.append({"t": float(t), "exceedances": hits, "frequency": hits / R,
                     "wilson_upper": upper, "bound": bound, "pass": upper <= bound})
    status = "PASS" if all(r["pass"] for r in rows) else "FAIL"
    return ConcentrationReport(status, n, R, dobrushin, tuple(rows), raw)


# ----------------------------------------------------------------------------
# variance comparison
# ----------------------------------------------------------------------------


def variance_ratio_test(smaller, larger) -> tuple[float, float]:
    """One-sided F test that ``larger`` has the larger variance; (ratio, p)."""
    a = np.asarray(smaller, dtype=np.float64)
    b = np.asarray(larger, dtype=np.float64)
    ratio = b.var(ddof=1) / a.var(ddof=1)
    return float(ratio), float(stats.f.sf(ratio, len(b) - 1, len(a) - 1))
