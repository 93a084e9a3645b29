import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from stablecond.estimates import (
    MCEstimate,
    iid_estimate,
    kish_ess,
    ratio_estimate,
    replicate_estimate,
    weighted_ks,
)

positive = arrays(float, st.integers(2, 60), elements=st.floats(0.01, 10))


@given(positive)
def test_kish_bounds(w):
    assert 1 - 1e-9 <= kish_ess(w) <= w.size + 1e-9


@given(positive, st.floats(0.1, 100))
def test_kish_scale_invariant(w, c):
    assert kish_ess(c * w) == pytest.approx(kish_ess(w))


def test_kish_equal_weights():
    assert kish_ess(np.ones(50)) == pytest.approx(50)
    assert kish_ess(np.zeros(5)) == 0


@given(arrays(float, st.integers(2, 50), elements=st.floats(-5, 5)))
def test_ratio_with_equal_weights_is_mean(v):
    est = ratio_estimate(v, np.ones_like(v))
    assert est.mean == pytest.approx(v.mean(), abs=1e-12)


def test_ratio_rejects_zero_weights():
    with pytest.raises(ValueError):
        ratio_estimate([1.0, 2.0], [0.0, 0.0])


def test_iid_and_replicates():
    est = iid_estimate([1.0, 2.0, 3.0])
    assert est.mean == 2.0 and est.std_error == pytest.approx(1 / np.sqrt(3))
    rep = replicate_estimate([1.0, 3.0], 100)
    assert rep.mean == 2.0 and rep.std_error == pytest.approx(1.0)
    with pytest.raises(ValueError):
        replicate_estimate([1.0], 10)


def test_within_and_gap():
    a, b = MCEstimate(1.0, 0.1, 10), MCEstimate(1.5, 0.2, 10)
    assert a.within(1.25) and not a.within(1.4)
    assert a.gap(b) == pytest.approx((0.5, np.hypot(0.1, 0.2)))
    assert f"{a:.2f}" == "1.00 ± 0.10"


def test_weighted_ks_detects_and_accepts():
    g = np.random.default_rng(0)
    x = g.random(20000)
    assert weighted_ks(x, np.ones_like(x), lambda y: np.clip(y, 0, 1)).passed
    assert not weighted_ks(x**2, np.ones_like(x), lambda y: np.clip(y, 0, 1)).passed
    # importance weights 2y on uniform draws reproduce the law with cdf y^2
    assert weighted_ks(x, 2 * x, lambda y: np.clip(y, 0, 1) ** 2).passed
