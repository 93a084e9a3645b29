"""First passage detection on the grid and killed path laws.

Two killing rules: ``HALF_LINE_NEGATIVE`` (the law ``Q_x``, killed on entering
``(-inf, 0)``) and ``POINT_ZERO`` (the law ``P0_x``, killed on hitting 0).

Point hits are detected by proximity, ``|X_k| <= eps_hit`` with
``eps_hit = c * dt^(1/alpha)``. A symmetric stable process with ``alpha < 2``
crosses 0 by jumps, so a bare sign change is not a hit; for ``alpha = 2``
paths are continuous and a sign change between grid points is one.

Half-line detection looks at grid values only, so excursions below 0 that
return within one step are missed (an O(dt^(1/alpha)) bias, measured by
refinement). For ``alpha = 2`` the optional ``bridge`` rule replaces this by
the exact Brownian bridge survival probability ``1 - exp(-a b / dt)`` for
consecutive values ``a, b`` of equal sign (variance ``2 dt`` per step).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .estimates import MCEstimate, iid_estimate
from .particles import propagate
from .stable import GridSpec, SamplePath, StableParams, as_generator, stable_increments

DEFAULT_EPS_FACTOR = 0.5


class KillKind(enum.Enum):
    HALF_LINE_NEGATIVE = "half_line_negative"
    POINT_ZERO = "point_zero"


@dataclass(frozen=True)
class KillSpec:
    kind: KillKind
    eps_hit: float = 0.0
    sign_change: bool = False
    bridge: bool = False
    dt: float | None = None

    def __post_init__(self):
        if self.kind is KillKind.POINT_ZERO and self.eps_hit <= 0 and not self.bridge:
            raise ValueError("point killing needs eps_hit > 0")
        if self.bridge and self.dt is None:
            raise ValueError("bridge rule needs the grid step dt")

    @classmethod
    def half_line(cls, params: StableParams | None = None, dt: float | None = None, bridge: bool = False):
        if bridge and (params is None or params.alpha != 2):
            raise ValueError("bridge correction is only exact for alpha = 2")
        return cls(KillKind.HALF_LINE_NEGATIVE, bridge=bridge, dt=dt)

    @classmethod
    def point_zero(
        cls, params: StableParams, dt: float, c: float = DEFAULT_EPS_FACTOR, bridge: bool = False
    ) -> "KillSpec":
        if bridge and params.alpha != 2:
            raise ValueError("bridge correction is only exact for alpha = 2")
        eps = 0.0 if bridge else c * dt ** (1 / params.alpha)
        return cls(KillKind.POINT_ZERO, eps_hit=eps, sign_change=params.alpha == 2, bridge=bridge, dt=dt)

    def is_live(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is KillKind.HALF_LINE_NEGATIVE:
            return x >= 0
        if self.bridge:
            return x != 0
        return np.abs(x) > self.eps_hit

    def survival(self, prev, cur) -> np.ndarray:
        """Probability that a path stepping ``prev -> cur`` is not killed in the step."""
        s = self.is_live(cur).astype(float)
        if self.kind is KillKind.POINT_ZERO and self.sign_change:
            s *= np.sign(prev) == np.sign(cur)
        if self.bridge:
            prod = np.maximum(prev * cur, 0.0)
            s *= -np.expm1(-prod / self.dt)
        return s


@dataclass(frozen=True)
class KilledPath:
    path: SamplePath
    zeta_index: int | None
    kill_kind: KillKind

    @property
    def alive(self) -> bool:
        return self.zeta_index is None

    def alive_through(self, t: float) -> bool:
        return self.zeta_index is None or self.zeta_index > self.path.grid.index_of(t)


@dataclass(frozen=True)
class ReflectedPath:
    path: SamplePath
    running_min: np.ndarray
    reflected: np.ndarray


def first_passage_negative(path: SamplePath) -> int | None:
    hits = np.flatnonzero(path.values[1:] < 0)
    return int(hits[0]) + 1 if hits.size else None


def first_hit_zero(path: SamplePath, eps_hit: float, sign_change: bool = False) -> int | None:
    if eps_hit <= 0:
        raise ValueError("eps_hit must be positive")
    v = path.values
    hit = np.abs(v[1:]) <= eps_hit
    if sign_change:
        hit |= np.sign(v[1:]) != np.sign(v[:-1])
    idx = np.flatnonzero(hit)
    return int(idx[0]) + 1 if idx.size else None


def kill_path(path: SamplePath, spec: KillSpec) -> KilledPath:
    if spec.kind is KillKind.HALF_LINE_NEGATIVE:
        z = first_passage_negative(path)
    else:
        z = first_hit_zero(path, spec.eps_hit, spec.sign_change)
    return KilledPath(path, z, spec.kind)


def reflected_path(path: SamplePath) -> ReflectedPath:
    m = np.minimum.accumulate(path.values)
    return ReflectedPath(path, m, path.values - m)


def survival_probability(
    x: float, t: float, spec: KillSpec, params: StableParams, grid: GridSpec, n: int, rng
) -> MCEstimate:
    """Monte Carlo estimate of ``Q_x(t < zeta)`` or ``P0_x(t < zeta)``."""
    if not spec.is_live(x) or (spec.kind is KillKind.POINT_ZERO and x == 0):
        raise ValueError(f"start point {x} is already killed (the origin is regular for itself)")
    k = grid.index_of(t)
    sub = GridSpec(k * grid.dt, k)
    ens = propagate(params, sub, x, n, as_generator(rng), survival=spec.survival)
    return iid_estimate(ens.weights)


def killed_marginals(
    params: StableParams,
    grid: GridSpec,
    starts,
    n: int,
    rng,
    spec: KillSpec,
    record_times,
) -> tuple[np.ndarray, np.ndarray]:
    """Killed paths from several start points driven by common increments.

    Returns ``(values, alive)``, both shaped ``(len(starts), n, len(record_times))``;
    ``alive`` holds the survival weight accumulated up to each record time.
    """
    gen = as_generator(rng)
    x = np.repeat(np.asarray(starts, dtype=float)[:, None], n, axis=1)
    w = spec.is_live(x).astype(float)
    idx = {grid.index_of(t): j for j, t in enumerate(record_times)}
    values = np.empty(x.shape + (len(record_times),))
    alive = np.empty_like(values)
    for k in range(1, grid.n_steps + 1):
        prev = x
        x = prev + stable_increments(params, grid.dt, n, gen)
        w *= spec.survival(prev, x)
        if k in idx:
            values[..., idx[k]] = x
            alive[..., idx[k]] = w
    return values, alive
