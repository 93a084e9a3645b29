import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from stablecond.estimates import ks_one_sample, ks_two_sample
from stablecond.stable import (
    GridSpec,
    RngStream,
    StableParams,
    endpoint_samples,
    estimate_positivity,
    positivity_from_beta,
    shift_path,
    simulate_path,
    stable_increments,
    verify_scaling,
)


def gen(*idx):
    return RngStream(1234, idx).generator()


class TestParams:
    def test_subordinator_case_rejected(self):
        with pytest.raises(ValueError, match="subordinator case excluded"):
            StableParams(0.5, 1.0)
        with pytest.raises(ValueError, match="subordinator"):
            StableParams(0.8, 0.0)

    @pytest.mark.parametrize("alpha,rho", [(1.5, 0.3), (1.5, 0.7), (2.0, 0.6), (0.0, 0.5), (2.5, 0.5)])
    def test_out_of_range(self, alpha, rho):
        with pytest.raises(ValueError):
            StableParams(alpha, rho)

    def test_symmetric_requires_half(self):
        with pytest.raises(ValueError):
            StableParams(1.5, 0.4, symmetric=True)

    def test_gamma_up(self):
        assert StableParams(1.5, 0.4).gamma_up == pytest.approx(0.9)
        assert StableParams(2.0).gamma_up == 1.0

    @given(st.floats(1.05, 1.95), st.floats(-1, 1))
    def test_beta_round_trip(self, alpha, beta):
        rho = positivity_from_beta(alpha, beta)
        assert StableParams(alpha, rho).beta == pytest.approx(beta, abs=1e-9)

    def test_cauchy_drift(self):
        assert StableParams(1.0, 0.5).cauchy_drift == 0.0
        with pytest.warns(UserWarning):
            p = StableParams(1.0, 0.75)
        assert p.cauchy_drift == pytest.approx(1.0)


class TestIncrements:
    def test_brownian_variance_two(self):
        x = stable_increments(StableParams(2.0), 1.0, 10**6, gen(0))
        assert np.var(x) == pytest.approx(2.0, rel=5e-3)

    def test_brownian_gaussian_ks(self):
        x = stable_increments(StableParams(2.0), 0.3, 20000, gen(1))
        assert ks_one_sample(x, stats.norm(scale=math.sqrt(0.6)).cdf).passed

    def test_cauchy(self):
        x = stable_increments(StableParams(1.0), 1.0, 20000, gen(2))
        assert ks_one_sample(x, stats.cauchy.cdf).passed

    def test_symmetric_15_against_scipy(self):
        # e^{-|lam|^alpha} is scipy's S1 parametrization with unit scale
        x = stable_increments(StableParams(1.5), 1.0, 4000, gen(3))
        assert ks_one_sample(x, stats.levy_stable(1.5, 0.0).cdf).passed

    def test_symmetric_positivity_and_median(self):
        x = stable_increments(StableParams(1.5), 1.0, 10**5, gen(4))
        assert abs(np.mean(x >= 0) - 0.5) < 3 * 0.5 / math.sqrt(x.size)
        assert abs(np.median(x)) < 0.02

    def test_symmetry_ks(self):
        x = stable_increments(StableParams(1.2), 1.0, 20000, gen(5))
        y = stable_increments(StableParams(1.2), 1.0, 20000, gen(6))
        assert ks_two_sample(x, -y).passed

    @pytest.mark.parametrize("alpha,rho", [(1.5, 0.4), (1.8, 0.55), (0.7, 0.3), (1.2, 0.6)])
    def test_positivity_matches_rho(self, alpha, rho):
        est = estimate_positivity(StableParams(alpha, rho), 1.0, 10**5, gen(7))
        assert est.within(rho)

    def test_positivity_time_independent(self):
        p = StableParams(1.5)
        a = estimate_positivity(p, 0.1, 10**5, gen(8))
        b = estimate_positivity(p, 10.0, 10**5, gen(9))
        d, se = a.gap(b)
        assert d <= 3 * se

    def test_brownian_positivity_large_t(self):
        assert estimate_positivity(StableParams(2.0), 7.0, 10**5, gen(10)).within(0.5)


class TestScaling:
    def test_identity_scaling(self):
        assert verify_scaling(StableParams(1.5), 1.0, 1.0, 20000, gen(11)).passed

    def test_brownian(self):
        assert verify_scaling(StableParams(2.0), 4.0, 1.0, 20000, gen(12)).passed

    def test_alpha_15(self):
        assert verify_scaling(StableParams(1.5), 10.0, 0.5, 10**5, gen(13)).passed

    def test_asymmetric(self):
        assert verify_scaling(StableParams(1.5, 0.4), 3.0, 1.0, 20000, gen(14)).passed


class TestPaths:
    def test_empty_grid(self):
        path = simulate_path(StableParams(1.5), GridSpec(0.0, 0), 0.7, RngStream(1))
        assert path.values.tolist() == [0.7]

    def test_start_point(self):
        path = simulate_path(StableParams(1.2, 0.6), GridSpec(1.0, 10), 5.0, RngStream(1))
        assert path.values[0] == 5.0 and path.values.size == 11

    @given(st.integers(0, 2**63), st.integers(0, 50))
    def test_bit_reproducible(self, seed, idx):
        g = GridSpec(1.0, 20)
        a = simulate_path(StableParams(1.5), g, 0.0, RngStream(seed, (idx,)))
        b = simulate_path(StableParams(1.5), g, 0.0, RngStream(seed, (idx,)))
        assert np.array_equal(a.values, b.values)

    def test_streams_differ(self):
        g = GridSpec(1.0, 20)
        a = simulate_path(StableParams(1.5), g, 0.0, RngStream(3, (0,)))
        b = simulate_path(StableParams(1.5), g, 0.0, RngStream(3, (1,)))
        assert not np.array_equal(a.values, b.values)

    def test_brownian_endpoint_variance(self):
        x = endpoint_samples(StableParams(2.0), 1.0, 10**5, gen(15), n_steps=10)
        assert np.var(x) == pytest.approx(2.0, rel=0.02)

    def test_shift(self):
        g = GridSpec(2.0, 2)
        path = simulate_path(StableParams(1.5), g, 0.0, RngStream(4))
        assert np.array_equal(shift_path(path, 0.0).values, path.values)
        assert shift_path(path, 1.0).values.tolist() == path.values[1:].tolist()
        end = shift_path(path, 2.0)
        assert end.values.tolist() == [path.values[-1]]
        with pytest.raises(ValueError):
            shift_path(path, 2.5)


class TestGrid:
    def test_from_dt(self):
        g = GridSpec.from_dt(1.0, 4e-4)
        assert g.n_steps == 2500 and g.index_of(0.25) == 625

    def test_off_grid(self):
        with pytest.raises(ValueError):
            GridSpec(1.0, 10).index_of(0.15)
        with pytest.raises(ValueError):
            GridSpec.from_dt(1.0, 0.3)

    @given(st.integers(1, 1000), st.data())
    def test_index_round_trip(self, n, data):
        g = GridSpec(1.0, n)
        k = data.draw(st.integers(0, n))
        assert g.index_of(g.times[k]) == k


def test_rng_stream_child():
    s = RngStream(9).child(2, 3)
    assert s.index == (2, 3) and s.tag == "9:2.3"
    with pytest.raises(ValueError):
        RngStream(-1)
