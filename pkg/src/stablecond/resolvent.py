"""Resolvent density of the symmetric stable process and the function h_times.

    u_q(x) = (1/pi) int_0^inf cos(x lam) / (q + lam^alpha) dlam

The integral is split at a cutoff ``lam*`` with ``q << lam*^alpha``. Below the
cutoff adaptive Gauss-Kronrod is used. Above it the non-oscillatory part is
summed as the convergent series ``sum_k (-q)^k int lam^(-alpha (k+1))`` and the
cosine part uses QUADPACK's Fourier-tail routine (integration over cosine
half-periods with epsilon-algorithm acceleration).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

Q_LADDER = (1e-4, 1e-5, 1e-6)
X_GRID = (0.5, 1.0, 2.0, 4.0)


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    epsabs: float = 1e-13
    epsrel: float = 1e-12
    limit: int = 500
    cutoff_factor: float = 4.0  # lam* = cutoff_factor * max(1, q^(1/alpha)), at least 2 pi / x

    def __post_init__(self):
        if self.epsabs <= 0 or self.epsrel <= 0 or self.limit < 1 or self.cutoff_factor <= 1:
            raise ValueError("invalid quadrature specification")

    def cutoff(self, q: float, alpha: float, x: float = 0.0) -> float:
        # at least one cosine period, so the Fourier-tail cycles start cleanly for small x
        lam = self.cutoff_factor * max(1.0, q ** (1 / alpha))
        return max(lam, 2 * math.pi / x) if x > 0 else lam


def _quad(f, a, b, spec: QuadratureSpec, **kw) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info, *rest = integrate.quad(
            f, a, b, epsabs=spec.epsabs, epsrel=spec.epsrel, limit=spec.limit, full_output=1, **kw
        )
    tol = max(spec.epsabs, spec.epsrel * abs(val)) * 1e3
    if rest and err > tol:
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge: value {val}, error estimate {err}, {rest[0]}")
    return val


def _tail_series(q: float, alpha: float, lam: float, terms: int = 200) -> float:
    """int_lam^inf dl / (q + l^alpha) for q < lam^alpha."""
    r = q / lam**alpha
    if r >= 1:
        raise ValueError("tail series needs q < lam^alpha")
    total = 0.0
    for k in range(terms):
        term = (-r) ** k * lam / (alpha * (k + 1) - 1) / lam**alpha
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total


def _check(q: float, alpha: float) -> None:
    if q <= 0:
        raise ValueError("q must be positive")
    if not 1 < alpha <= 2:
        raise ValueError("the resolvent density needs 1 < alpha <= 2")


def u_q(x: float, q: float, alpha: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    _check(q, alpha)
    x = abs(x)
    lam = spec.cutoff(q, alpha, x)
    peak = [q ** (1 / alpha)] if q ** (1 / alpha) < lam else None
    if x == 0:
        body = _quad(lambda l: 1.0 / (q + l**alpha), 0.0, lam, spec, points=peak)
        return (body + _tail_series(q, alpha, lam)) / math.pi
    body = _quad(lambda l: math.cos(x * l) / (q + l**alpha), 0.0, lam, spec, points=peak)
    tail = _quad(lambda l: 1.0 / (q + l**alpha), lam, np.inf, spec, weight="cos", wvar=x)
    return (body + tail) / math.pi


def u_q0_closed(q: float, alpha: float) -> float:
    _check(q, alpha)
    return q ** (1 / alpha - 1) / (alpha * math.sin(math.pi / alpha))


def resolvent_gap(x: float, q: float, alpha: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``u_q(0) - u_q(x)``, integrated as one kernel ``(1 - cos x lam)/(q + lam^alpha)``
    so that no cancellation between two large numbers occurs as q -> 0."""
    _check(q, alpha)
    x = abs(x)
    if x == 0:
        return 0.0
    lam = spec.cutoff(q, alpha, x)
    peak = [q ** (1 / alpha)] if q ** (1 / alpha) < lam else None
    body = _quad(lambda l: 2 * math.sin(x * l / 2) ** 2 / (q + l**alpha), 0.0, lam, spec, points=peak)
    tail = _tail_series(q, alpha, lam) - _quad(
        lambda l: 1.0 / (q + l**alpha), lam, np.inf, spec, weight="cos", wvar=x
    )
    return (body + tail) / math.pi


@dataclass(frozen=True)
class Extrapolation:
    value: float
    ladder: tuple[float, ...]
    residual: float
    rate: float


def extrapolate_q0(values, qs=Q_LADDER) -> Extrapolation:
    """Limit q -> 0 of ``c0 + c1 q^p`` fitted through three geometric ladder points
    (Aitken's delta-squared in q)."""
    d0, d1, d2 = values
    a, b = d0 - d1, d1 - d2
    if b == 0:
        return Extrapolation(d2, tuple(values), 0.0, math.inf)
    r = a / b
    if not r > 1:
        raise QuadratureError(f"q-ladder {values} is not Cauchy (successive-difference ratio {r:.4g})")
    value = d2 - b / (r - 1)
    p = math.log(r) / math.log(qs[0] / qs[1])
    return Extrapolation(value, tuple(values), abs(value - d2), p)


def h_times_via_resolvent(
    x: float, alpha: float, spec: QuadratureSpec = QuadratureSpec(), qs=Q_LADDER, detail: bool = False
):
    """``lim_{q -> 0+} u_q(0) - u_q(x)``, extrapolated from the q-ladder."""
    if not 1 < alpha <= 2:
        raise ValueError("h_times needs 1 < alpha <= 2")
    if x == 0:
        ext = Extrapolation(0.0, (0.0,) * len(qs), 0.0, math.nan)
    else:
        ext = extrapolate_q0([resolvent_gap(x, q, alpha, spec) for q in qs], qs)
    return ext if detail else ext.value


def power_law_slope(alpha: float, xs=X_GRID, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Least-squares slope of log h_times(x) against log |x|."""
    h = [h_times_via_resolvent(x, alpha, spec) for x in xs]
    return float(np.polyfit(np.log(np.abs(xs)), np.log(h), 1)[0])


def extract_c_times(
    alpha: float, spec: QuadratureSpec = QuadratureSpec(), xs=X_GRID, rel_tol: float = 1e-3
) -> tuple[float, float]:
    """``C_times = |x|^(alpha-1) / h_times(x)`` averaged over ``xs``.

    Returns ``(mean, standard deviation)`` across the x-grid; raises when the
    relative spread exceeds ``rel_tol``.
    """
    c = np.array([abs(x) ** (alpha - 1) / h_times_via_resolvent(x, alpha, spec) for x in xs])
    mean, sd = float(c.mean()), float(c.std(ddof=1))
    if sd > rel_tol * mean:
        raise QuadratureError(f"C_times depends on x: values {c} (relative spread {sd / mean:.2e})")
    return mean, sd
