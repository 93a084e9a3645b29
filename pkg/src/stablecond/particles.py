"""Streaming propagation of weighted path ensembles on a uniform grid.

Paths are never stored in full: only the values at requested grid indices,
the current position, optional running extrema and the weights. Per step the
weight is multiplied by ``survival(prev, cur) * h(cur) / h(prev)``; with
``resample`` set, the ensemble is systematically resampled whenever the
effective sample size drops below ``resample * n`` (a sequential Monte Carlo
scheme for Doob transforms and rare survival events).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .estimates import kish_ess
from .stable import GridSpec, StableParams, stable_increments

Array = np.ndarray


@dataclass
class Ensemble:
    values: Array            # (n, len(record)) values at the recorded grid indices
    final: Array             # positions at the horizon
    weights: Array           # relative weights, zero for killed paths
    log_norm: float          # log of the weight product mean (normalizing constant estimate)
    n_resample: int
    running_max: Array | None = None
    running_min: Array | None = None
    max_values: Array | None = None  # running extrema snapshot at each recorded index
    min_values: Array | None = None

    @property
    def n(self) -> int:
        return self.final.size

    @property
    def ess(self) -> float:
        return kish_ess(self.weights)

    @property
    def alive_fraction(self) -> float:
        return float(np.mean(self.weights > 0))


def systematic_resample(weights: Array, gen: np.random.Generator) -> Array:
    n = weights.size
    c = np.cumsum(weights)
    c /= c[-1]
    u = (gen.random() + np.arange(n)) / n
    return np.minimum(np.searchsorted(c, u, side="right"), n - 1)


def propagate(
    params: StableParams,
    grid: GridSpec,
    x0,
    n: int,
    gen: np.random.Generator,
    *,
    survival: Callable[[Array, Array], Array] | None = None,
    h: Callable[[Array], Array] | None = None,
    record: Sequence[int] = (),
    resample: float | None = None,
    extrema: bool = False,
    initial_weights: Array | None = None,
) -> Ensemble:
    x = np.broadcast_to(np.asarray(x0, dtype=float), (n,)).copy()
    w = np.ones(n) if initial_weights is None else np.asarray(initial_weights, dtype=float).copy()
    record = list(record)
    if any(k < 0 or k > grid.n_steps for k in record):
        raise ValueError("record index outside the grid")
    slots: dict[int, list[int]] = {}
    for j, k in enumerate(record):
        slots.setdefault(k, []).append(j)
    values = np.empty((n, len(record)))
    hx = h(x) if h is not None else None
    run_max = x.copy() if extrema else None
    run_min = x.copy() if extrema else None
    max_values = np.empty_like(values) if extrema else None
    min_values = np.empty_like(values) if extrema else None
    for j in slots.get(0, ()):
        values[:, j] = x
        if extrema:
            max_values[:, j] = x
            min_values[:, j] = x
    log_norm = 0.0
    n_res = 0
    dt = grid.dt
    for k in range(1, grid.n_steps + 1):
        prev = x
        x = prev + stable_increments(params, dt, n, gen)
        if survival is not None:
            w *= survival(prev, x)
        if h is not None:
            hnew = h(x)
            live = w > 0
            ratio = np.zeros(n)
            np.divide(hnew, hx, out=ratio, where=live & (hx > 0))
            w *= ratio
            hx = hnew
        if extrema:
            np.maximum(run_max, x, out=run_max)
            np.minimum(run_min, x, out=run_min)
        for j in slots.get(k, ()):
            values[:, j] = x
            if extrema:
                max_values[:, j] = run_max
                min_values[:, j] = run_min
        if resample is not None and k < grid.n_steps:
            mean_w = w.mean()
            if mean_w <= 0:
                raise RuntimeError(f"ensemble extinct at step {k} of {grid.n_steps}")
            if kish_ess(w) < resample * n:
                idx = systematic_resample(w, gen)
                x, values = x[idx], values[idx]
                if hx is not None:
                    hx = hx[idx]
                if extrema:
                    run_max, run_min = run_max[idx], run_min[idx]
                    max_values, min_values = max_values[idx], min_values[idx]
                log_norm += np.log(mean_w)
                w = np.ones(n)
                n_res += 1
    mean_w = w.mean()
    log_norm = log_norm + np.log(mean_w) if mean_w > 0 else -np.inf
    return Ensemble(values, x, w, float(log_norm), n_res, run_max, run_min, max_values, min_values)
