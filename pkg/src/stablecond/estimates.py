"""Monte Carlo estimate containers and goodness-of-fit helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo estimate with its standard error.

    ``n`` is the number of simulated paths behind the estimate; ``ess`` is
    the effective sample size when the estimate is importance weighted.
    """

    mean: float
    std_error: float
    n: int
    ess: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_se * self.std_error

    def gap(self, other: "MCEstimate") -> tuple[float, float]:
        """Absolute difference and the combined standard error."""
        return abs(self.mean - other.mean), float(np.hypot(self.std_error, other.std_error))

    def __format__(self, spec):
        spec = spec or ".4f"
        return f"{self.mean:{spec}} ± {self.std_error:{spec}}"


def iid_estimate(samples) -> MCEstimate:
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n == 0:
        raise ValueError("no samples")
    se = samples.std(ddof=1) / np.sqrt(n) if n > 1 else np.inf
    return MCEstimate(float(samples.mean()), float(se), n)


def kish_ess(weights) -> float:
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    if s <= 0:
        return 0.0
    return float(s * s / np.dot(w, w))


def ratio_estimate(values, weights) -> MCEstimate:
    """Self-normalized importance sampling estimate of ``E_w[values]``.

    The standard error uses the delta method,
    ``var ~ sum w_i^2 (v_i - mu)^2 / (sum w_i)^2``.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total <= 0:
        raise ValueError("all importance weights vanish")
    mu = float(np.dot(w, v) / total)
    se = float(np.sqrt(np.dot(w * w, (v - mu) ** 2)) / total)
    return MCEstimate(mu, se, v.size, ess=kish_ess(w))


def replicate_estimate(chunk_means, n_total: int, ess: float | None = None) -> MCEstimate:
    """Combine independent replicate estimates (one per RNG chunk)."""
    m = np.asarray(chunk_means, dtype=float)
    if m.size < 2:
        raise ValueError("replicate standard errors need at least two chunks")
    return MCEstimate(float(m.mean()), float(m.std(ddof=1) / np.sqrt(m.size)), n_total, ess=ess)


@dataclass(frozen=True)
class KSReport:
    statistic: float
    pvalue: float
    n: float
    level: float

    @property
    def passed(self) -> bool:
        return self.pvalue > self.level


def ks_two_sample(a, b, level: float = 0.01) -> KSReport:
    res = stats.ks_2samp(a, b)
    n_eff = len(a) * len(b) / (len(a) + len(b))
    return KSReport(float(res.statistic), float(res.pvalue), n_eff, level)


def ks_one_sample(samples, cdf, level: float = 0.01) -> KSReport:
    res = stats.kstest(samples, cdf)
    return KSReport(float(res.statistic), float(res.pvalue), len(samples), level)


def weighted_ks(samples, weights, cdf, level: float = 0.01) -> KSReport:
    """KS distance between a weighted empirical CDF and ``cdf``.

    The p-value comes from the asymptotic Kolmogorov distribution evaluated
    at the Kish effective sample size, which is the usual approximation for
    iid importance-weighted samples.
    """
    x = np.asarray(samples, dtype=float)
    w = np.asarray(weights, dtype=float)
    keep = w > 0
    x, w = x[keep], w[keep]
    order = np.argsort(x)
    x, w = x[order], w[order]
    ecdf = np.cumsum(w) / w.sum()
    ecdf_left = np.concatenate(([0.0], ecdf[:-1]))
    f = cdf(x)
    d = float(max(np.max(ecdf - f), np.max(f - ecdf_left)))
    n_eff = kish_ess(w)
    pvalue = float(stats.kstwobign.sf(d * np.sqrt(n_eff)))
    return KSReport(d, pvalue, n_eff, level)
