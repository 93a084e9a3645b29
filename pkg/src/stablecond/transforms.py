"""Doob h-transforms of killed stable laws, meanders, and Brownian oracles.

Two transforms are implemented, both unnormalized:

* stay positive: ``dP_up_x = (X_t / x)^gamma dQ_x`` with ``gamma = alpha (1 - rho)``;
* avoid the origin: ``dP_times_x = |X_t / x|^(alpha - 1) dP0_x`` (symmetric,
  ``1 < alpha <= 2``).

Laws started at 0 are reached through small entrance points. For the
avoid-origin transform the entrance point carries a random sign, which is
exact by symmetry and is required at ``alpha = 2`` where the transformed
process never changes sign.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .estimates import MCEstimate, iid_estimate, kish_ess, ratio_estimate, replicate_estimate
from .killing import KillKind, KillSpec
from .particles import Ensemble, propagate
from .resolvent import extract_c_times
from .stable import GridSpec, RngStream, StableParams, as_generator, stable_increments

DEFAULT_RESAMPLE = 0.5
MIN_ESS = 100


class TransformKind(enum.Enum):
    STAY_POSITIVE = "stay_positive"
    AVOID_ORIGIN = "avoid_origin"


@dataclass(frozen=True)
class HKind:
    kind: TransformKind
    exponent: float

    @classmethod
    def stay_positive(cls, params: StableParams) -> "HKind":
        return cls(TransformKind.STAY_POSITIVE, params.gamma_up)

    @classmethod
    def avoid_origin(cls, params: StableParams) -> "HKind":
        if not params.is_symmetric or not 1 < params.alpha <= 2:
            raise ValueError("avoid-origin transform requires a symmetric process with 1 < alpha <= 2")
        return cls(TransformKind.AVOID_ORIGIN, params.alpha - 1)

    @classmethod
    def of(cls, kind: TransformKind | str, params: StableParams) -> "HKind":
        kind = TransformKind(kind)
        return cls.stay_positive(params) if kind is TransformKind.STAY_POSITIVE else cls.avoid_origin(params)

    @property
    def positive(self) -> bool:
        return self.kind is TransformKind.STAY_POSITIVE

    def h(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.positive:
            return np.where(x > 0, np.abs(x) ** self.exponent, 0.0)
        return np.abs(x) ** self.exponent

    def kill_spec(self, params: StableParams, dt: float, bridge: bool = False, c: float = 0.5) -> KillSpec:
        if self.positive:
            return KillSpec.half_line(params, dt, bridge=bridge)
        return KillSpec.point_zero(params, dt, c=c, bridge=bridge)

    def check_start(self, x: float) -> None:
        if self.positive and x <= 0:
            raise ValueError("stay-positive transform needs x > 0; use the entrance approximation for x = 0")
        if not self.positive and x == 0:
            raise ValueError("avoid-origin transform needs x != 0; use the entrance approximation for x = 0")


def h_up(x: float, params: StableParams) -> float:
    if x < 0:
        raise ValueError("h_up is defined on [0, inf)")
    return float(x ** params.gamma_up)


def h_times(x: float, params: StableParams) -> float:
    return float(abs(x) ** (params.alpha - 1))


@dataclass(frozen=True)
class TestFunctional:
    """``Z = f(X_{t_1}, ..., X_{t_n})`` with ``0 < t_1 < ... < t_n``.

    ``f`` takes an ``(n_paths, n)`` array and returns ``n_paths`` values.
    """

    __test__ = False

    name: str
    times: tuple[float, ...]
    f: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size and (t[0] <= 0 or np.any(np.diff(t) <= 0)):
            raise ValueError("functional times must be positive and strictly increasing")

    @property
    def horizon(self) -> float:
        return self.times[-1] if self.times else 0.0

    def indices(self, grid: GridSpec) -> list[int]:
        return [grid.index_of(s) for s in self.times]

    def __call__(self, values: np.ndarray) -> np.ndarray:
        out = np.asarray(self.f(np.atleast_2d(values)), dtype=float)
        return np.broadcast_to(out, (np.atleast_2d(values).shape[0],))

    def shifted(self, offset: float) -> "TestFunctional":
        """The same functional applied to ``X - offset``."""
        g = self.f
        return TestFunctional(self.name, self.times, lambda v: g(v - offset))


def constant_functional(c: float = 1.0) -> TestFunctional:
    return TestFunctional(f"const{c:g}", (), lambda v: np.full(v.shape[0], c))


def canonical_suite(horizon: float, alpha: float) -> list[TestFunctional]:
    """Fixed functional suite, scale-covariant in the horizon.

    Marginals are read at fixed fractions of ``horizon`` and rescaled by
    ``horizon^(1/alpha)``, so the suite is the same under the scaling map.
    """
    s = horizon ** (1 / alpha)
    t1, t2 = 0.4 * horizon, 0.8 * horizon
    return [
        constant_functional(1.0),
        TestFunctional("bump", (t2,), lambda v: np.exp(-((v[:, 0] / s) ** 2))),
        TestFunctional(
            "bump2", (t1, t2), lambda v: np.exp(-((v[:, 0] / s) ** 2) - 0.5 * (v[:, 1] / s) ** 2)
        ),
        TestFunctional("odd", (t2,), lambda v: (v[:, 0] / s) * np.exp(-((v[:, 0] / s) ** 2) / 2)),
    ]


class FunctionalSet:
    """Several functionals read off one simulation: the union of their
    grid indices is recorded once and each functional gets its own columns."""

    def __init__(self, Z, grid: GridSpec, extra: Sequence[int] = ()):
        self.single = isinstance(Z, TestFunctional)
        self.items = [Z] if self.single else list(Z)
        idx = sorted({k for z in self.items for k in z.indices(grid)} | set(extra))
        self.record = idx
        self._pos = {k: j for j, k in enumerate(idx)}
        self._cols = [[self._pos[k] for k in z.indices(grid)] for z in self.items]

    def column(self, k: int) -> int:
        return self._pos[k]

    def evaluate(self, values: np.ndarray) -> list[np.ndarray]:
        return [z(values[:, c]) for z, c in zip(self.items, self._cols)]

    def pack(self, estimates: list):
        return estimates[0] if self.single else estimates


def _grid_to(t: float, dt: float) -> GridSpec:
    return GridSpec.from_dt(t, dt)


def _check_horizon(fs: FunctionalSet, t: float) -> None:
    if any(z.horizon > t + 1e-12 for z in fs.items):
        raise ValueError("functional reaches beyond the horizon")


def expectation_htransform(
    x: float,
    Z,
    t: float,
    kind: HKind,
    params: StableParams,
    dt: float,
    n: int,
    rng,
    *,
    bridge: bool = False,
    c: float = 0.5,
):
    """``P_up_x[Z] = Q_x[Z (X_t/x)^gamma]`` (or the avoid-origin analogue) by
    plain importance weighting of killed paths. Killed paths weigh 0.

    ``Z`` may be one functional or a sequence; the result has the same shape.
    """
    kind.check_start(x)
    grid = _grid_to(t, dt)
    fs = FunctionalSet(Z, grid)
    _check_horizon(fs, t)
    spec = kind.kill_spec(params, dt, bridge=bridge, c=c)
    if not spec.is_live(x):
        raise ValueError(f"start point {x} lies inside the killing window")
    ens = propagate(params, grid, x, n, as_generator(rng), survival=spec.survival, record=fs.record)
    w = ens.weights * kind.h(ens.final) / kind.h(np.array(x))
    out = []
    for z in fs.evaluate(ens.values):
        est = iid_estimate(z * w)
        out.append(MCEstimate(est.mean, est.std_error, n, ess=kish_ess(w), extra={"alive": ens.alive_fraction}))
    return fs.pack(out)


def phi(
    x: float, t: float, kind: HKind, params: StableParams, dt: float, n: int, rng, *,
    bridge: bool = False, x_small: float | None = None, chunks: int = 8,
) -> MCEstimate:
    """``P_up_x[X_t^-gamma]`` computed as ``Q_x(t < zeta) / x^gamma`` (resp.
    ``P0_x(t < zeta) / |x|^(alpha-1)``); ``x = 0`` goes through the entrance
    approximation from ``x_small``."""
    if x == 0:
        xs = x_small if x_small is not None else 0.02 * t ** (1 / params.alpha)
        inv = TestFunctional("inv_h", (t,), lambda v: 1.0 / kind.h(v[:, 0]))
        return entrance_approximation(xs, inv, t, kind, params, dt, n, rng, bridge=bridge, chunks=chunks)
    kind.check_start(x)
    spec = kind.kill_spec(params, dt, bridge=bridge)
    ens = propagate(params, _grid_to(t, dt), x, n, as_generator(rng), survival=spec.survival)
    est = iid_estimate(ens.weights)
    hx = float(kind.h(np.array(x)))
    return MCEstimate(est.mean / hx, est.std_error / hx, n)


def _chunked(n: int, chunks: int, rng) -> list[tuple[int, np.random.Generator]]:
    if chunks < 2:
        raise ValueError("replicate standard errors need chunks >= 2")
    if not isinstance(rng, RngStream):
        raise TypeError("chunked estimators need an RngStream")
    sizes = [n // chunks + (1 if i < n % chunks else 0) for i in range(chunks)]
    return [(m, rng.child(i).generator()) for i, m in enumerate(sizes)]


def _entrance_start(x_small: float, kind: HKind, m: int, gen: np.random.Generator) -> np.ndarray:
    if kind.positive:
        return np.full(m, x_small)
    return x_small * gen.choice([-1.0, 1.0], size=m)


def h_ensemble(
    x_small: float, t: float, kind: HKind, params: StableParams, dt: float, m: int,
    gen: np.random.Generator, record: Sequence[int], *, bridge: bool = False, extrema: bool = False,
    resample: float = DEFAULT_RESAMPLE, c: float = 0.5,
) -> Ensemble:
    """Sequential Monte Carlo ensemble for ``P_up_x`` / ``P_times_x`` from an
    entrance point (random sign for the avoid-origin transform)."""
    spec = kind.kill_spec(params, dt, bridge=bridge, c=c)
    if not spec.is_live(x_small):
        raise ValueError("entrance point lies inside the killing window")
    x0 = _entrance_start(x_small, kind, m, gen)
    return propagate(
        params, _grid_to(t, dt), x0, m, gen, survival=spec.survival, h=kind.h,
        record=record, resample=resample, extrema=extrema,
    )


def entrance_approximation(
    x_small: float,
    Z,
    t: float,
    kind: HKind,
    params: StableParams,
    dt: float,
    n: int,
    rng: RngStream,
    *,
    bridge: bool = False,
    chunks: int = 8,
):
    """Estimate ``P_up_0[Z]`` (resp. ``P_times_0[Z]``) by running the transform
    from ``x_small``. Standard errors come from independent chunk replicates."""
    if x_small <= 0:
        raise ValueError("x_small must be positive")
    grid = _grid_to(t, dt)
    fs = FunctionalSet(Z, grid)
    _check_horizon(fs, t)
    means, ess = [], 0.0
    for m, gen in _chunked(n, chunks, rng):
        ens = h_ensemble(x_small, t, kind, params, dt, m, gen, fs.record, bridge=bridge)
        total = ens.weights.sum()
        means.append([np.dot(ens.weights, z) / total for z in fs.evaluate(ens.values)])
        ess += ens.ess
    means = np.array(means)
    return fs.pack([replicate_estimate(means[:, j], n, ess=ess) for j in range(len(fs.items))])


@dataclass(frozen=True)
class Rejection:
    epsilon: float
    variant: str = "shift"  # "shift": condition on [eps, eps + t]; "floor": X >= -eps on [0, t]

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.variant not in ("shift", "floor"):
            raise ValueError("variant must be 'shift' or 'floor'")


@dataclass(frozen=True)
class WeightedRatio:
    x_small: float


class NoAcceptedPaths(RuntimeError):
    def __init__(self, acceptance: float, n: int):
        super().__init__(f"no path survived the conditioning (acceptance rate {acceptance:.3g} over {n} paths)")
        self.acceptance = acceptance


class LowESSError(RuntimeError):
    pass


def conditioned_samples(
    t: float, Z, kind: HKind, method: Rejection, params: StableParams, dt: float,
    n: int, rng, *, bridge: bool = False,
) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    """Paths from 0 under the epsilon-conditioning.

    Returns ``(Z values per functional, acceptance weights in [0, 1], endpoints)``.
    With the ``bridge`` rule the weights are survival probabilities, otherwise
    indicators. The shift variant starts the grid at time epsilon from an exact
    draw of ``X_epsilon``.
    """
    gen = as_generator(rng)
    grid = _grid_to(t, dt)
    fs = FunctionalSet(Z, grid)
    _check_horizon(fs, t)
    eps = method.epsilon
    spec = kind.kill_spec(params, dt, bridge=bridge)
    if method.variant == "floor":
        if not kind.positive:
            raise ValueError("the floor conditioning only exists for the stay-positive transform")
        # X >= -eps from 0  <=>  X + eps >= 0 from eps
        x0 = np.full(n, eps)
        offset = eps
    else:
        x0 = stable_increments(params, eps, n, gen)
        offset = 0.0
    w0 = spec.is_live(x0).astype(float)
    ens = propagate(params, grid, x0, n, gen, survival=spec.survival, record=fs.record, initial_weights=w0)
    return fs.evaluate(ens.values - offset), ens.weights, ens.final - offset


def meander_estimate(
    t: float,
    Z,
    kind: HKind,
    method: Rejection | WeightedRatio,
    params: StableParams,
    dt: float,
    n: int,
    rng,
    *,
    bridge: bool = False,
    chunks: int = 8,
    min_ess: float = MIN_ESS,
):
    """Estimate the meander expectation ``M^(t)[Z]``.

    ``Rejection`` conditions paths from 0 (shifted by epsilon, or above the
    floor ``-epsilon``); ``WeightedRatio`` computes
    ``P_x[Z X_t^-gamma] / P_x[X_t^-gamma]`` under the transform from a small
    entrance point and refuses when the effective sample size of the final
    reweighting falls below ``min_ess``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    grid = _grid_to(t, dt)
    fs = FunctionalSet(Z, grid, extra=[grid.n_steps])
    _check_horizon(fs, t)
    if isinstance(method, Rejection):
        zs, w, _ = conditioned_samples(t, fs.items, kind, method, params, dt, n, rng, bridge=bridge)
        acc = float(w.mean())
        if acc == 0:
            raise NoAcceptedPaths(0.0, n)
        out = []
        for z in zs:
            est = ratio_estimate(z, w)
            out.append(MCEstimate(est.mean, est.std_error, n, ess=est.ess, extra={"acceptance": acc}))
        return fs.pack(out)
    means, ess = [], 0.0
    last = fs.column(grid.n_steps)
    for m, gen in _chunked(n, chunks, rng):
        ens = h_ensemble(method.x_small, t, kind, params, dt, m, gen, fs.record, bridge=bridge)
        w = np.zeros(m)
        live = ens.weights > 0
        w[live] = ens.weights[live] / kind.h(ens.values[live, last])
        e = kish_ess(w)
        if e < min_ess:
            raise LowESSError(f"weighted-ratio meander: effective sample size {e:.1f} < {min_ess}")
        ess += e
        means.append([np.dot(w, z) / w.sum() for z in fs.evaluate(ens.values)])
    means = np.array(means)
    return fs.pack([replicate_estimate(means[:, j], n, ess=ess) for j in range(len(fs.items))])


def symmetrize(sampler: Callable[..., np.ndarray]) -> Callable[..., np.ndarray]:
    """Wrap ``sampler(n, gen) -> (n, ...) array`` so each sample's sign is
    flipped with probability 1/2, realizing ``(P_up + P_down) / 2``."""

    def wrapped(n: int, gen: np.random.Generator, *args, **kwargs) -> np.ndarray:
        out = np.asarray(sampler(n, gen, *args, **kwargs), dtype=float)
        signs = gen.choice([-1.0, 1.0], size=n).reshape((n,) + (1,) * (out.ndim - 1))
        return out * signs

    return wrapped


@dataclass
class Constants:
    """Normalizing constants with error bars. The stay-positive constants
    depend on the local time normalization and are not estimated here."""

    C_times: float | None = None
    C_times_err: float | None = None
    C_up1: float | None = None
    C_up2: float | None = None

    @classmethod
    def from_resolvent(cls, alpha: float) -> "Constants":
        """``C_times`` from the resolvent quadrature, with its spread over the x-grid."""
        mean, sd = extract_c_times(alpha)
        return cls(C_times=mean, C_times_err=sd)


# Brownian oracles, alpha = 2 with variance 2t.

def bessel3_oracle(y, t: float):
    """Density of the three-dimensional Bessel process from 0 at time t,
    i.e. of ``sqrt(2t) * chi_3``."""
    y = np.asarray(y, dtype=float)
    s = math.sqrt(2 * t)
    return np.where(y >= 0, math.sqrt(2 / math.pi) * y**2 / s**3 * np.exp(-(y**2) / (2 * s * s)), 0.0)


def bessel3_cdf(y, t: float):
    s = math.sqrt(2 * t)
    return np.where(np.asarray(y) >= 0, special.gammainc(1.5, np.asarray(y) ** 2 / (2 * s * s)), 0.0)


def rayleigh_meander_cdf(y, t: float):
    """Brownian meander endpoint law: ``P(X_t <= y) = 1 - exp(-y^2 / (4t))``."""
    y = np.asarray(y, dtype=float)
    return np.where(y >= 0, -np.expm1(-(y**2) / (4 * t)), 0.0)


def brownian_survival(x: float, t: float) -> float:
    """``Q_x(t < zeta)`` for Brownian motion with variance 2t (reflection principle)."""
    return math.erf(x / math.sqrt(4 * t))


def brownian_phi(x: float, t: float) -> float:
    return brownian_survival(x, t) / x


def bessel3_transition(a, b, r: float):
    """Transition density of the Bessel(3) process from ``a > 0`` to ``b`` over
    time ``r``: the killed Brownian kernel h-transformed by ``b / a``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s2 = 2 * r
    g = lambda z: np.exp(-(z**2) / (2 * s2)) / math.sqrt(2 * math.pi * s2)
    return np.where(b > 0, b / a * (g(b - a) - g(b + a)), 0.0)


def bessel3_expectation(Z: TestFunctional) -> float:
    """``E[Z]`` for the Bessel(3) process from 0 (variance 2t), by quadrature.
    Supports functionals of at most two time points."""
    t = Z.times
    ev = lambda *v: float(Z(np.array([v]))[0])
    if len(t) == 0:
        return float(Z(np.zeros((1, 0)))[0])
    top = 12 * math.sqrt(2 * t[-1])
    if len(t) == 1:
        return integrate.quad(lambda y: ev(y) * float(bessel3_oracle(y, t[0])), 0, top, epsabs=1e-11)[0]
    if len(t) == 2:
        r = t[1] - t[0]
        inner = lambda y: integrate.quad(
            lambda z: ev(y, z) * float(bessel3_transition(y, z, r)), 0, y + 12 * math.sqrt(2 * r), epsabs=1e-11
        )[0]
        return integrate.quad(lambda y: inner(y) * float(bessel3_oracle(y, t[0])), 0, top, epsabs=1e-10)[0]
    raise NotImplementedError("quadrature oracle supports at most two time points")


def brownian_meander_expectation(Z: TestFunctional, t: float) -> float:
    """``M_t[Z]`` for the Brownian meander of length ``t`` (variance 2t), by
    quadrature. The unnormalized density of the first marginal at ``s`` is
    ``y exp(-y^2 / 4s) P_y(t - s < zeta)``; later marginals follow the killed kernel."""
    times = Z.times
    if any(u > t + 1e-12 for u in times):
        raise ValueError("functional reaches beyond the meander length")
    ev = lambda *v: float(Z(np.array([v]))[0])
    surv = lambda y, r: math.erf(y / math.sqrt(4 * r)) if r > 0 else 1.0
    if len(times) == 0:
        return float(Z(np.zeros((1, 0)))[0])
    s1 = times[0]
    top = 12 * math.sqrt(2 * s1)
    entry = lambda y: y * math.exp(-(y**2) / (4 * s1))
    norm = integrate.quad(lambda y: entry(y) * surv(y, t - s1), 0, top, epsabs=1e-12)[0]
    if len(times) == 1:
        num = integrate.quad(lambda y: entry(y) * ev(y) * surv(y, t - s1), 0, top, epsabs=1e-12)[0]
        return num / norm
    if len(times) == 2:
        r = times[1] - s1
        s2 = 2 * r
        g = lambda z: math.exp(-(z**2) / (2 * s2)) / math.sqrt(2 * math.pi * s2)
        inner = lambda y: integrate.quad(
            lambda z: ev(y, z) * (g(z - y) - g(z + y)) * surv(z, t - times[1]), 0, y + 12 * math.sqrt(s2),
            epsabs=1e-12,
        )[0]
        return integrate.quad(lambda y: entry(y) * inner(y), 0, top, epsabs=1e-11)[0] / norm
    raise NotImplementedError("quadrature oracle supports at most two time points")
