import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from stablecond.particles import propagate, systematic_resample
from stablecond.stable import GridSpec, StableParams


@given(arrays(float, st.integers(1, 80), elements=st.floats(0.0, 1.0)), st.integers(0, 2**32 - 1))
def test_systematic_counts(w, seed):
    if w.sum() == 0:
        w = w + 1.0
    idx = systematic_resample(w, np.random.default_rng(seed))
    counts = np.bincount(idx, minlength=w.size)
    expected = w.size * w / w.sum()
    assert np.all(counts >= np.floor(expected - 1e-9)) and np.all(counts <= np.ceil(expected + 1e-9))


def test_plain_propagation_records():
    g = GridSpec(1.0, 10)
    ens = propagate(StableParams(1.5), g, 0.5, 100, np.random.default_rng(1), record=[0, 5, 10], extrema=True)
    assert np.all(ens.weights == 1) and ens.values.shape == (100, 3)
    assert np.all(ens.values[:, 0] == 0.5) and np.array_equal(ens.values[:, 2], ens.final)
    assert np.all(ens.max_values[:, 2] >= ens.values[:, 1]) and np.all(ens.min_values[:, 1] <= 0.5)


def test_extinction_raises():
    g = GridSpec(1.0, 10)
    with pytest.raises(RuntimeError, match="extinct"):
        propagate(StableParams(1.5), g, 1.0, 10, np.random.default_rng(0),
                  survival=lambda a, b: np.zeros_like(b), resample=0.5)


def test_bad_record_index():
    with pytest.raises(ValueError):
        propagate(StableParams(1.5), GridSpec(1.0, 10), 0.0, 5, np.random.default_rng(0), record=[11])


def test_resampling_keeps_normalizer():
    # weights 1{X >= 0} per step: log_norm estimates log P(stay >= 0 on the grid) either way
    g = GridSpec(1.0, 20)
    surv = lambda a, b: (b >= 0).astype(float)
    p = StableParams(2.0)
    plain = propagate(p, g, 1.0, 40000, np.random.default_rng(2), survival=surv)
    smc = propagate(p, g, 1.0, 40000, np.random.default_rng(3), survival=surv, resample=0.9)
    assert smc.n_resample > 0
    assert np.exp(smc.log_norm) == pytest.approx(np.exp(plain.log_norm), abs=0.015)
