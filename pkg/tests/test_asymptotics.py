"""Gaussian helpers and the second-order resolution formulas."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsearch import (bec, bsc, capacity, dispersion, gaussian_cdf,
                     gaussian_quantile, z_channel)
from qsearch.asymptotics import (LogWindow, MiFlavor, ResolutionMode,
                                 SecondOrderQuery, adaptive_resolution_lb,
                                 adaptivity_gain_lb, invert_queries,
                                 joint_resolution, joint_window, mi_resolution,
                                 mi_window, phase_transition_rate,
                                 separate_resolution, separate_window,
                                 z_mi_constants, z_mi_fixed_spec)

from oracles import quantile_bisect

LN2 = math.log(2.0)


def q_(n, d, eps, mode=ResolutionMode.JOINT, window=LogWindow.NONE):
    return SecondOrderQuery(n=n, d=d, eps=eps, mode=mode, include_log_term=window)


def test_gaussian_cdf_basics():
    assert gaussian_cdf(0.0) == 0.5
    assert gaussian_cdf(40.0) == 1.0
    assert gaussian_cdf(-40.0) == pytest.approx(0.0, abs=1e-300)
    assert gaussian_cdf(1.0) + gaussian_cdf(-1.0) == pytest.approx(1.0, abs=1e-15)


def test_quantile_known_values():
    assert gaussian_quantile(0.5) == 0.0
    assert gaussian_quantile(0.841344746) == pytest.approx(1.0, abs=1e-6)
    assert gaussian_quantile(0.1) == pytest.approx(-1.281552, abs=1e-6)


@pytest.mark.parametrize("p", [1e-12, 1e-6, 0.001, 0.025, 0.1, 0.3, 0.5,
                               0.7, 0.9, 0.975, 0.999, 1 - 1e-6])
def test_quantile_against_bisection_oracle(p):
    assert gaussian_quantile(p) == pytest.approx(quantile_bisect(p), abs=1e-10)


@given(st.floats(min_value=1e-6, max_value=0.5))
def test_quantile_is_odd(p):
    # below p ~ 1e-6 the rounding of 1 - p dominates, so oddness is only
    # meaningful where the reflected argument still determines the tail
    assert gaussian_quantile(p) == pytest.approx(-gaussian_quantile(1.0 - p), abs=1e-10)


@given(st.floats(min_value=-8.0, max_value=5.0))
def test_quantile_inverts_cdf(x):
    # above x ~ 5 the CDF is within a few ulps of 1 and no longer encodes x
    assert gaussian_quantile(gaussian_cdf(x)) == pytest.approx(x, abs=1e-9)


def test_quantile_rejects_endpoints():
    for p in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            gaussian_quantile(p)


def test_joint_noiseless_is_exact_bits():
    for n in (10, 40, 100):
        v = joint_resolution(bec(0.0), q_(n, 1, 0.1))
        assert v / LN2 == float(n)


def test_joint_median_eps_drops_quantile_term():
    rep = capacity(bsc(0.4))
    for n, d in ((80, 2), (33, 3)):
        assert joint_resolution(bsc(0.4), q_(n, d, 0.5)) == pytest.approx(
            n * rep.capacity / d, abs=1e-12)


def test_joint_composes_capacity_dispersion_quantile():
    spec = bsc(0.4)
    n, d, eps = 80, 2, 0.1
    want = (n * capacity(spec).capacity
            + math.sqrt(n * dispersion(spec, eps)) * gaussian_quantile(eps)) / d
    assert joint_resolution(spec, q_(n, d, eps)) == pytest.approx(want, abs=1e-12)


def test_window_application():
    spec = bsc(0.4)
    n, d, eps = 100, 2, 0.1
    base = joint_resolution(spec, q_(n, d, eps))
    low, high = joint_window(n, d)
    assert low == -0.5 * math.log(n) / d and high == math.log(n) / d
    assert joint_resolution(spec, q_(n, d, eps, window=LogWindow.MINUS_HALF_LOG)) == \
        pytest.approx(base + low, abs=1e-12)
    assert joint_resolution(spec, q_(n, d, eps, window=LogWindow.PLUS_LOG)) == \
        pytest.approx(base + high, abs=1e-12)
    slow, shigh = separate_window(n, d)
    assert slow == -0.5 * math.log(n / d) and shigh == math.log(n / d)
    assert mi_window(n) == (-0.5 * math.log(n), math.log(n))


def test_separate_equals_joint_in_one_dimension():
    spec = bsc(0.4)
    a = joint_resolution(spec, q_(50, 1, 0.2))
    b = separate_resolution(spec, q_(50, 1, 0.2, mode=ResolutionMode.SEPARATE))
    assert a == pytest.approx(b, abs=1e-12)


def test_separate_strictly_below_joint_at_known_point():
    spec = bsc(0.4)
    a = joint_resolution(spec, q_(100, 2, 0.1))
    b = separate_resolution(spec, q_(100, 2, 0.1, mode=ResolutionMode.SEPARATE))
    assert b < a


@given(st.sampled_from([bsc(0.2), bsc(0.4), bec(0.5), z_channel(0.7)]),
       st.integers(min_value=2, max_value=6),
       st.integers(min_value=10, max_value=500),
       st.floats(min_value=0.05, max_value=0.45))
@settings(max_examples=60)
def test_split_budget_never_beats_joint(spec, d, n, eps):
    a = joint_resolution(spec, q_(n, d, eps))
    b = separate_resolution(spec, q_(n, d, eps, mode=ResolutionMode.SEPARATE))
    assert b < a + 1e-12


def test_separate_noiseless_halves_exactly():
    v = separate_resolution(bec(0.0), q_(40, 2, 0.1, mode=ResolutionMode.SEPARATE))
    assert v == pytest.approx(20.0 * LN2, abs=1e-12)


def test_adaptive_lower_bound_values():
    spec = bsc(0.4)
    c = capacity(spec).capacity
    lb = ResolutionMode.ADAPTIVE_LB
    assert adaptive_resolution_lb(spec, q_(10, 1, 0.0, mode=lb), l=10.0) == pytest.approx(
        10.0 * c, abs=1e-12)
    assert adaptive_resolution_lb(spec, q_(100, 2, 0.5, mode=lb), l=100.0) == pytest.approx(
        100.0 * c, abs=1e-12)
    cb = capacity(bec(0.2)).capacity
    assert adaptive_resolution_lb(bec(0.2), q_(80, 1, 0.1, mode=lb), l=80.0) == pytest.approx(
        80.0 * cb / 0.9, abs=1e-12)


def test_gain_median_eps_reduces_to_first_order():
    spec = bsc(0.4)
    c = capacity(spec).capacity
    assert adaptivity_gain_lb(spec, 60, 2, 0.5) == pytest.approx(
        60 * c / 2.0, abs=1e-12)


def test_gain_positive_below_median():
    assert adaptivity_gain_lb(bsc(0.2), 1000, 2, 0.1) > 0.0


def test_gain_monotone_in_n():
    vals = [adaptivity_gain_lb(bec(0.3), n, 2, 0.001) for n in range(100, 3001, 100)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_mi_useless_symmetric_channel_is_zero():
    assert mi_resolution(100, 1, 0.1, MiFlavor.BSC, 0.5) == 0.0


def test_mi_noiseless_erasure_is_exact_bits():
    assert mi_resolution(40, 1, 0.1, MiFlavor.BEC, 0.0) / LN2 == 40.0


def test_mi_one_sided_closed_form_matches_generic():
    for zeta in (0.3, 0.5, 0.8):
        closed = mi_resolution(100, 1, 0.1, MiFlavor.Z, zeta)
        generic = mi_resolution(100, 1, 0.1, MiFlavor.GENERIC,
                                spec=z_mi_fixed_spec(zeta))
        assert closed == pytest.approx(generic, abs=1e-8)


def test_one_sided_constants_known_point():
    q_star, c, v = z_mi_constants(0.5)
    assert q_star == pytest.approx(0.4, abs=1e-12)
    assert c == pytest.approx(math.log(1.25), abs=1e-12)
    assert v > 0.0


def test_phase_transition_rates():
    assert phase_transition_rate(bec(0.0), 2) == pytest.approx(LN2 / 2.0, abs=1e-12)
    assert phase_transition_rate(bsc(0.2), 2) == pytest.approx(
        capacity(bsc(0.2)).capacity / 2.0, abs=1e-12)
    assert phase_transition_rate(bsc(0.4), 3) == pytest.approx(
        capacity(bsc(0.4)).capacity / 3.0, abs=1e-12)


def test_invert_queries_noiseless_exact():
    assert invert_queries(bec(0.0), 1, 2.0 ** -40, 0.1) == 40


def test_invert_queries_median_eps():
    c = capacity(bsc(0.4)).capacity
    assert invert_queries(bsc(0.4), 2, 1e-3, 0.5) == math.ceil(2.0 * math.log(1e3) / c)


@given(st.sampled_from([bsc(0.4), bec(0.3), z_channel(0.6)]),
       st.integers(min_value=1, max_value=3),
       st.floats(min_value=1e-9, max_value=0.2),
       st.floats(min_value=0.05, max_value=0.5))
@settings(max_examples=40)
def test_invert_queries_is_tight(spec, d, delta, eps):
    n = invert_queries(spec, d, delta, eps)
    target = -d * math.log(delta)

    def total(m):
        return d * joint_resolution(spec, q_(m, d, eps))

    assert total(n) >= target - 1e-9
    if n > 1:
        assert total(n - 1) < target - 1e-9


def test_invert_queries_quantile_penalty():
    assert invert_queries(bsc(0.4), 2, 1e-3, 0.1) >= invert_queries(bsc(0.4), 2, 1e-3, 0.5)


def test_query_validation():
    with pytest.raises(ValueError):
        q_(0, 1, 0.1)
    with pytest.raises(ValueError):
        q_(10, 0, 0.1)
    with pytest.raises(ValueError):
        q_(10, 1, 1.0)
    with pytest.raises(ValueError):
        joint_resolution(bsc(0.4), q_(10, 1, 0.1, mode=ResolutionMode.SEPARATE))
