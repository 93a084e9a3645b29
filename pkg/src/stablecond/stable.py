"""Strictly stable Levy processes: parameters, increments, grid paths.

Normalization: in the symmetric case ``E exp(i lam X_t) = exp(-t |lam|^alpha)``,
so ``alpha = 2`` is Brownian motion with variance ``2t``. Asymmetric laws use
the standard Chambers-Mallows-Stuck scale (unit scale in the
Samorodnitsky-Taqqu parametrization), with the skewness chosen so that
``P(X_t >= 0) = rho``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .estimates import KSReport, MCEstimate, iid_estimate, ks_two_sample

_TOL = 1e-12


@dataclass(frozen=True)
class StableParams:
    alpha: float
    rho: float = 0.5
    symmetric: bool = False

    def __post_init__(self):
        a, r = self.alpha, self.rho
        if not 0 < a <= 2:
            raise ValueError(f"alpha must lie in (0, 2], got {a}")
        if self.symmetric and abs(r - 0.5) > _TOL:
            raise ValueError("symmetric process requires rho = 1/2")
        if a < 1:
            lo, hi = 0.0, 1.0
            if r in (0.0, 1.0):
                raise ValueError(
                    "subordinator case excluded: alpha < 1 with rho in {0, 1} "
                    "makes |X| a subordinator"
                )
        elif a == 1:
            lo, hi = 0.0, 1.0
            if r <= 0 or r >= 1:
                raise ValueError("alpha = 1 requires rho in (0, 1)")
        else:
            lo, hi = 1 - 1 / a, 1 / a
        if not lo - _TOL <= r <= hi + _TOL:
            raise ValueError(f"rho = {r} outside the admissible range [{lo:.6g}, {hi:.6g}] for alpha = {a}")
        if a == 1 and abs(r - 0.5) > _TOL:
            warnings.warn("asymmetric alpha = 1 (drifted Cauchy) is experimental", stacklevel=2)

    @classmethod
    def symmetric_stable(cls, alpha: float) -> "StableParams":
        return cls(alpha=alpha, rho=0.5, symmetric=True)

    @property
    def is_symmetric(self) -> bool:
        return self.symmetric or abs(self.rho - 0.5) <= _TOL

    @property
    def gamma_up(self) -> float:
        """Exponent alpha (1 - rho) of the stay-positive harmonic function."""
        return self.alpha * (1 - self.rho)

    @property
    def beta(self) -> float:
        """CMS skewness reproducing the positivity parameter rho."""
        a = self.alpha
        if a == 2 or a == 1 or self.is_symmetric:
            return 0.0
        b = math.tan(math.pi * a * (self.rho - 0.5)) / math.tan(math.pi * a / 2)
        return float(min(1.0, max(-1.0, b)))

    @property
    def cauchy_drift(self) -> float:
        # alpha = 1 strictly stable: symmetric Cauchy plus drift mu, rho = 1/2 + arctan(mu)/pi
        return math.tan(math.pi * (self.rho - 0.5))


def positivity_from_beta(alpha: float, beta: float) -> float:
    """Zolotarev's formula rho = 1/2 + arctan(beta tan(pi alpha / 2)) / (pi alpha)."""
    return 0.5 + math.atan(beta * math.tan(math.pi * alpha / 2)) / (math.pi * alpha)


@dataclass(frozen=True)
class GridSpec:
    t_max: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 0 or int(self.n_steps) != self.n_steps:
            raise ValueError("n_steps must be a non-negative integer")
        if self.t_max < 0 or (self.n_steps > 0 and self.t_max <= 0):
            raise ValueError("t_max must be positive")

    @classmethod
    def from_dt(cls, t_max: float, dt: float) -> "GridSpec":
        n = round(t_max / dt)
        if n < 1 or abs(n * dt - t_max) > 1e-9 * max(1.0, t_max):
            raise ValueError(f"t_max = {t_max} is not a multiple of dt = {dt}")
        return cls(t_max, n)

    @property
    def dt(self) -> float:
        return self.t_max / self.n_steps if self.n_steps else 0.0

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_steps + 1)

    def index_of(self, t: float) -> int:
        """Grid index of time ``t``; raises unless ``t`` is grid-aligned."""
        if self.n_steps == 0:
            if abs(t) > 1e-12:
                raise ValueError("empty grid only contains t = 0")
            return 0
        k = round(t / self.dt)
        if abs(k * self.dt - t) > 1e-9 * max(1.0, abs(t)) or not 0 <= k <= self.n_steps:
            raise ValueError(f"time {t} is not on the grid (dt = {self.dt}, t_max = {self.t_max})")
        return int(k)


@dataclass(frozen=True)
class RngStream:
    """A reproducible RNG stream: master seed plus a tuple stream index.

    Distinct indices give independent streams (``SeedSequence`` spawn keys);
    the same ``(seed, index)`` always reproduces the same bits.
    """

    seed: int
    index: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("master seed must be a 64-bit unsigned integer")
        if isinstance(self.index, int):
            object.__setattr__(self, "index", (self.index,))

    def child(self, *idx: int) -> "RngStream":
        return replace(self, index=self.index + tuple(int(i) for i in idx))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.index)))

    @property
    def tag(self) -> str:
        return f"{self.seed}:" + ".".join(map(str, self.index))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def stable_increments(params: StableParams, dt: float, size, gen: np.random.Generator) -> np.ndarray:
    """Draw iid copies of ``X_dt`` under ``P_0`` (Chambers-Mallows-Stuck)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = params.alpha
    if a == 2:
        return gen.normal(0.0, math.sqrt(2.0 * dt), size)
    if a == 1:
        c = np.tan(gen.uniform(-math.pi / 2, math.pi / 2, size))
        return dt * (c + params.cauchy_drift)
    v = gen.uniform(-math.pi / 2, math.pi / 2, size)
    w = gen.standard_exponential(size)
    beta = params.beta
    if beta == 0.0:
        av = a * v
        x = np.sin(av) / np.cos(v) ** (1 / a) * (np.cos(v - av) / w) ** ((1 - a) / a)
    else:
        tan_pa = math.tan(math.pi * a / 2)
        shift = math.atan(beta * tan_pa) / a
        scale = (1 + (beta * tan_pa) ** 2) ** (1 / (2 * a))
        avb = a * (v + shift)
        x = scale * np.sin(avb) / np.cos(v) ** (1 / a) * (np.cos(v - avb) / w) ** ((1 - a) / a)
    return dt ** (1 / a) * x


def sample_stable_increment(params: StableParams, dt: float, rng) -> float:
    return float(stable_increments(params, dt, None, as_generator(rng)))


@dataclass(frozen=True)
class SamplePath:
    grid: GridSpec
    x0: float
    values: np.ndarray = field(repr=False)
    seed_tag: str = ""

    def __post_init__(self):
        if len(self.values) != self.grid.n_steps + 1:
            raise ValueError("path length must be n_steps + 1")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def simulate_path(params: StableParams, grid: GridSpec, x0: float, rng) -> SamplePath:
    gen = as_generator(rng)
    values = np.empty(grid.n_steps + 1)
    values[0] = x0
    if grid.n_steps:
        values[1:] = x0 + np.cumsum(stable_increments(params, grid.dt, grid.n_steps, gen))
    tag = rng.tag if isinstance(rng, RngStream) else ""
    return SamplePath(grid, float(x0), values, tag)


def shift_path(path: SamplePath, epsilon: float) -> SamplePath:
    """The shift operator: new ``values[k] = values[k + epsilon/dt]``."""
    if epsilon < 0 or epsilon > path.grid.t_max + 1e-12:
        raise ValueError(f"shift {epsilon} outside [0, {path.grid.t_max}]")
    k = path.grid.index_of(epsilon)
    n = path.grid.n_steps - k
    grid = GridSpec(n * path.grid.dt, n)
    return SamplePath(grid, float(path.values[k]), path.values[k:].copy(), path.seed_tag)


def endpoint_samples(params: StableParams, t: float, n: int, gen, n_steps: int = 1) -> np.ndarray:
    """``n`` draws of ``X_t`` from 0, built as a sum of ``n_steps`` increments."""
    out = np.zeros(n)
    for _ in range(n_steps):
        out += stable_increments(params, t / n_steps, n, gen)
    return out


def verify_scaling(
    params: StableParams, k: float, t: float, n: int, rng, level: float = 0.01, n_steps: int = 16
) -> KSReport:
    """Two-sample KS test of ``k^(-1/alpha) X_{kt}`` against ``X_t``.

    ``X_{kt}`` is assembled from ``n_steps`` increments and ``X_t`` is drawn in
    one step, so the check exercises closure under convolution rather than
    the ``dt^(1/alpha)`` factor inside the sampler alone.
    """
    if k <= 0 or t <= 0:
        raise ValueError("k and t must be positive")
    gen = as_generator(rng)
    scaled = k ** (-1 / params.alpha) * endpoint_samples(params, k * t, n, gen, n_steps)
    direct = endpoint_samples(params, t, n, gen, 1)
    return ks_two_sample(scaled, direct, level)


def estimate_positivity(params: StableParams, t: float, n: int, rng, n_steps: int = 1) -> MCEstimate:
    if t <= 0:
        raise ValueError("t must be positive")
    x = endpoint_samples(params, t, n, as_generator(rng), n_steps)
    return iid_estimate(x >= 0)
