"""Capacity, dispersion branches, and moment computations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsearch import (bec, bsc, capacity, dispersion, fixed, mean_info_density,
                     third_abs_moment, variance_info_density, z_channel)
from qsearch.rng import stream

from oracles import blahut_binary, density_atoms, grid_capacity, moments

KINDS = {"bsc": bsc, "bec": bec, "z": z_channel}

mid = st.floats(min_value=0.02, max_value=0.98)
params = st.floats(min_value=0.0, max_value=1.0)


def test_mean_known_values():
    assert mean_info_density(bec(0.0), 0.5) == pytest.approx(math.log(2.0), abs=1e-15)
    assert mean_info_density(bsc(1.0), 0.5) == 0.0
    assert mean_info_density(bsc(0.4), 0.5) == pytest.approx(0.192745, abs=1e-6)


def test_variance_degenerate_cases():
    assert variance_info_density(bec(0.0), 0.5) == pytest.approx(0.0, abs=1e-15)
    assert variance_info_density(bsc(1.0), 0.5) == pytest.approx(0.0, abs=1e-15)


@given(st.sampled_from(sorted(KINDS)), st.floats(min_value=0.05, max_value=1.0), mid)
def test_moments_match_direct_enumeration(kind, param, q):
    spec = KINDS[kind](param)
    mean, var, third = moments(kind, param, q)
    assert mean_info_density(spec, q) == pytest.approx(mean, abs=1e-12)
    assert variance_info_density(spec, q) == pytest.approx(var, abs=1e-12)
    assert third_abs_moment(spec, q) == pytest.approx(third, abs=1e-12)


def test_variance_against_monte_carlo():
    # 10^7 draws from the single-letter law at (bsc 0.4, q=0.5)
    atoms = density_atoms("bsc", 0.4, 0.5)
    values = np.array([v for v, _ in atoms])
    weights = np.array([w for _, w in atoms])
    rng = stream(2024)
    draws = values[rng.choice(len(values), size=10 ** 7, p=weights / weights.sum())]
    v = variance_info_density(bsc(0.4), 0.5)
    se = draws.var(ddof=1) / math.sqrt(len(draws)) * math.sqrt(2.0)  # loose se of the var
    assert v > 0.0
    assert abs(draws.var(ddof=1) - v) <= 4.0 * max(se, 1e-4)


@given(st.sampled_from(sorted(KINDS)), st.floats(min_value=0.05, max_value=1.0), mid)
@settings(max_examples=30)
def test_capacity_dominates_every_mean(kind, param, q):
    spec = KINDS[kind](param)
    assert capacity(spec).capacity >= mean_info_density(spec, q) - 1e-9


@pytest.mark.parametrize("kind,param", [
    ("bsc", 0.2), ("bsc", 0.4), ("bsc", 0.7), ("bec", 0.3), ("bec", 0.8),
    ("z", 0.5), ("z", 0.9),
])
def test_capacity_matches_grid_oracle(kind, param):
    want, q_star = grid_capacity(kind, param, points=200_001)
    rep = capacity(KINDS[kind](param))
    assert rep.capacity == pytest.approx(want, abs=1e-9)
    assert min(abs(a - q_star) for a in rep.achievers) < 1e-4


def test_noiseless_erasure_channel():
    rep = capacity(bec(0.0))
    assert rep.capacity == math.log(2.0)
    assert rep.achievers == (0.5,)
    assert rep.v_low == 0.0


def test_fully_noisy_symmetric_channel_has_two_achievers():
    rep = capacity(bsc(1.0))
    assert len(rep.achievers) == 2
    a, b = rep.achievers
    assert abs(a + b - 1.0) < 1e-6
    va = variance_info_density(bsc(1.0), a)
    vb = variance_info_density(bsc(1.0), b)
    assert va == pytest.approx(vb, abs=1e-8)
    assert dispersion(bsc(1.0), 0.1) == pytest.approx(dispersion(bsc(1.0), 0.9), abs=1e-8)


def test_unique_achiever_dispersion_branches_agree():
    rep = capacity(bsc(0.4))
    assert len(rep.achievers) == 1
    v = variance_info_density(bsc(0.4), rep.achievers[0])
    assert dispersion(bsc(0.4), 0.1) == pytest.approx(v, abs=1e-12)
    assert dispersion(bsc(0.4), 0.9) == pytest.approx(v, abs=1e-12)


def test_fixed_channel_matches_alternating_maximization():
    m = ((0.85, 0.15), (0.25, 0.75))
    rep = capacity(fixed(m))
    assert rep.capacity == pytest.approx(blahut_binary(m), abs=1e-9)
    m3 = ((0.7, 0.1, 0.2), (0.05, 0.75, 0.2))
    rep3 = capacity(fixed(m3))
    assert rep3.capacity == pytest.approx(blahut_binary(m3), abs=1e-9)


def test_flat_mean_curve_reports_midpoint_achiever():
    rep = capacity(fixed(((0.5, 0.5), (0.5, 0.5))))
    assert rep.capacity == pytest.approx(0.0, abs=1e-12)
    assert rep.achievers == (0.5,)


def test_report_is_cached_and_plain_floats():
    a = capacity(bsc(0.4))
    b = capacity(bsc(0.4))
    assert a is b
    assert type(a.capacity) is float
    assert all(type(x) is float for x in a.achievers)


def test_dispersion_rejects_bad_eps():
    with pytest.raises(ValueError):
        dispersion(bsc(0.4), 0.0)
    with pytest.raises(ValueError):
        dispersion(bsc(0.4), 1.0)
