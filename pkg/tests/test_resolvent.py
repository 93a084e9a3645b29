import math

import pytest
from hypothesis import given, strategies as st

from stablecond.experiments import c_times_closed
from stablecond.resolvent import (
    QuadratureError,
    QuadratureSpec,
    extract_c_times,
    extrapolate_q0,
    h_times_via_resolvent,
    power_law_slope,
    resolvent_gap,
    u_q,
    u_q0_closed,
)

# C_times = pi (alpha - 1) / (Gamma(2 - alpha) sin(pi alpha / 2)), evaluated with mpmath
C_TIMES = {1.2: 0.5674594902107987931, 1.5: 1.2533141373155002512, 2.0: 2.0}


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8, 2.0])
@pytest.mark.parametrize("q", [0.1, 1.0, 10.0])
def test_closed_form_at_origin(alpha, q):
    assert u_q(0.0, q, alpha) == pytest.approx(u_q0_closed(q, alpha), rel=1e-6)


def test_closed_form_values():
    assert u_q0_closed(1.0, 2.0) == pytest.approx(0.5)
    assert u_q0_closed(4.0, 2.0) == pytest.approx(0.25)


@pytest.mark.parametrize("x", [0.3, 1.0, 3.0])
@pytest.mark.parametrize("q", [0.1, 1.0, 10.0])
def test_brownian_resolvent(x, q):
    # alpha = 2: u_q(x) = exp(-sqrt(q) |x|) / (2 sqrt(q))
    assert u_q(x, q, 2.0) == pytest.approx(math.exp(-math.sqrt(q) * x) / (2 * math.sqrt(q)), rel=1e-8, abs=1e-12)


@given(st.floats(0.05, 5.0), st.sampled_from([1.2, 1.5, 1.8]))
def test_symmetric_in_x(x, alpha):
    assert u_q(-x, 1.0, alpha) == u_q(x, 1.0, alpha)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_gap_nonnegative_nondecreasing(alpha):
    xs = [0.1, 0.5, 1.0, 2.0, 4.0]
    g = [resolvent_gap(x, 0.01, alpha) for x in xs]
    assert g[0] >= 0 and all(b >= a for a, b in zip(g, g[1:]))
    assert g[2] == pytest.approx(u_q(0.0, 0.01, alpha) - u_q(1.0, 0.01, alpha), rel=1e-7)


def test_brownian_h_times():
    assert h_times_via_resolvent(3.0, 2.0) == pytest.approx(1.5, rel=1e-4)
    assert h_times_via_resolvent(0.0, 1.5) == 0.0


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8, 2.0])
def test_power_law(alpha):
    assert power_law_slope(alpha) == pytest.approx(alpha - 1, abs=1e-3)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 2.0])
def test_c_times(alpha):
    mean, sd = extract_c_times(alpha)
    assert sd < 1e-3 * mean
    assert mean == pytest.approx(C_TIMES[alpha], rel=1e-3)
    assert c_times_closed(alpha) == pytest.approx(C_TIMES[alpha], rel=1e-12)


def test_extrapolation_exact_for_power_model():
    qs = (1e-2, 1e-3, 1e-4)
    ext = extrapolate_q0([3.0 + 2.0 * q**0.4 for q in qs], qs)
    assert ext.value == pytest.approx(3.0, rel=1e-12) and ext.rate == pytest.approx(0.4)


def test_extrapolation_refuses_divergent_ladder():
    with pytest.raises(QuadratureError):
        extrapolate_q0([1.0, 2.0, 4.0])


def test_domain_errors():
    with pytest.raises(ValueError):
        u_q(1.0, 0.0, 1.5)
    with pytest.raises(ValueError):
        u_q(1.0, 1.0, 0.9)
    with pytest.raises(ValueError):
        QuadratureSpec(cutoff_factor=0.5)
