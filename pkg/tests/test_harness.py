"""Experiment orchestration, grid-size recipe, statistics, figure tables."""

import math

import pytest

from qsearch import bec, bsc, capacity, dispersion
from qsearch.asymptotics import gaussian_quantile
from qsearch.errors import ResourceLimitError
from qsearch.harness import (ExperimentMode, ExperimentSpec, MarginRule,
                             SUMMARY_CSV_HEADER, choose_resolution_m, figure_series,
                             rows_to_csv, run_adaptive_batch, run_experiment,
                             summaries_to_csv, summary_csv_row, wilson_interval)

from oracles import grid_capacity, moments, quantile_bisect, wilson_direct


def test_wilson_endpoints_are_exact():
    low, high = wilson_interval(0, 100)
    assert low == 0.0 and 0.0 < high < 1.0
    low, high = wilson_interval(100, 100)
    assert 0.0 < low < 1.0 and high == 1.0


def test_wilson_matches_direct_formula():
    z = quantile_bisect(0.975)
    assert wilson_interval(10, 100) == pytest.approx(wilson_direct(10, 100, z), abs=1e-12)
    assert wilson_interval(37, 500, conf=0.9) == pytest.approx(
        wilson_direct(37, 500, quantile_bisect(0.95)), abs=1e-12)


def test_wilson_brackets_the_point_estimate():
    for k, n in ((0, 10), (3, 17), (10, 10), (250, 1000)):
        low, high = wilson_interval(k, n)
        assert low <= k / n <= high


def test_wilson_validation():
    for k, n in ((-1, 10), (11, 10), (0, 0)):
        with pytest.raises(ValueError):
            wilson_interval(k, n)


def test_choose_m_noiseless_is_exact_power():
    for n in (10, 40):
        choice = choose_resolution_m(bec(0.0), n, 1, 0.37)
        assert choice.m == 2 ** n
        assert not choice.clamped


def test_choose_m_median_eps_drops_quantile_term():
    c = capacity(bsc(0.4)).capacity
    choice = choose_resolution_m(bsc(0.4), 30, 2, 0.5)
    assert choice.m == math.floor(math.exp(30 * c / 2))


def test_choose_m_matches_oracle_composition():
    c, q_star = grid_capacity("bsc", 0.4)
    v = moments("bsc", 0.4, q_star)[1]
    for n, expect in ((20, 7), (30, 56), (40, 485)):
        exponent = n * c + math.sqrt(n * v) * quantile_bisect(0.1)
        assert math.floor(math.exp(exponent)) == expect
        assert choose_resolution_m(bsc(0.4), n, 1, 0.1).m == expect


def test_choose_m_margin_shaves_half_log_n():
    plain = choose_resolution_m(bsc(0.4), 40, 2, 0.1)
    margined = choose_resolution_m(bsc(0.4), 40, 2, 0.1, MarginRule.MINUS_HALF_LOG_N)
    assert margined.exponent == pytest.approx(
        plain.exponent - 0.5 * math.log(40) / 2, abs=1e-12)
    assert margined.m <= plain.m


def test_choose_m_clamps_nonpositive_exponent():
    choice = choose_resolution_m(bsc(0.4), 1, 3, 0.1)
    assert choice.m == 2
    assert choice.clamped
    assert choice.exponent < 0.0


def test_choose_m_validation():
    for eps in (0.0, 1.0):
        with pytest.raises(ValueError):
            choose_resolution_m(bsc(0.4), 10, 1, eps)


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(channel=bsc(0.4), n=10, d=1, eps_target=0.1, trials=0,
                       master_seed=1)
    with pytest.raises(ValueError):
        ExperimentSpec(channel=bsc(0.4), n=10, d=1, eps_target=1.0, trials=5,
                       master_seed=1)
    with pytest.raises(ValueError):
        ExperimentSpec(channel=bsc(0.4), n=10, d=1, eps_target=0.1, trials=5,
                       master_seed=1, m_override=1)


def test_noiseless_sweep_never_misses():
    exp = ExperimentSpec(channel=bec(0.0), n=40, d=1, eps_target=0.1, trials=200,
                         master_seed=5, m_override=4)
    summary = run_experiment(exp)
    assert summary.excess_count == 0
    assert summary.excess_rate == 0.0
    assert summary.mean_max_abs_error <= 1.0 / 8


def test_summary_is_deterministic_and_thread_independent():
    exp = ExperimentSpec(channel=bsc(0.4), n=12, d=1, eps_target=0.3, trials=60,
                         master_seed=9)
    rows = {summary_csv_row(run_experiment(exp, threads=t)) for t in (1, 1, 4)}
    assert len(rows) == 1


def test_separate_mode_reports_remainder():
    exp = ExperimentSpec(channel=bsc(0.4), n=10, d=3, eps_target=0.3, trials=20,
                         master_seed=2, mode=ExperimentMode.SEPARATE, m_override=2)
    summary = run_experiment(exp)
    assert summary.remainder_queries == 1
    joint = run_experiment(ExperimentSpec(
        channel=bsc(0.4), n=10, d=1, eps_target=0.3, trials=20, master_seed=2,
        m_override=2))
    assert joint.remainder_queries == 0


def test_separate_mode_needs_enough_queries():
    exp = ExperimentSpec(channel=bsc(0.4), n=2, d=3, eps_target=0.3, trials=5,
                         master_seed=2, mode=ExperimentMode.SEPARATE, m_override=2)
    with pytest.raises(ValueError):
        run_experiment(exp)


def test_budget_error_carries_remediation_hint():
    exp = ExperimentSpec(channel=bsc(0.4), n=200, d=1, eps_target=0.1, trials=5,
                         master_seed=2)
    with pytest.raises(ResourceLimitError, match="reduce n"):
        run_experiment(exp)


def test_adaptive_mode_tracks_stop_times():
    exp = ExperimentSpec(channel=bsc(0.4), n=20, d=1, eps_target=0.2, trials=30,
                         master_seed=4, mode=ExperimentMode.ADAPTIVE, m_override=4)
    summary = run_experiment(exp)
    assert summary.mean_stop_time is not None and summary.mean_stop_time >= 1.0
    assert 0.0 <= summary.excess_rate <= 1.0
    assert summary_csv_row(run_experiment(exp)) == summary_csv_row(summary)


def test_adaptive_batch_summary_consistency():
    batch = run_adaptive_batch(bsc(0.4), m=4, d=1, p=0.3, threshold=2.0, trials=50,
                               master_seed=6)
    assert batch.excess_rate == batch.excess_count / 50
    assert batch.wilson_low <= batch.excess_rate <= batch.wilson_high
    assert batch.truncated_count == 0
    line = batch.to_csv().splitlines()
    assert line[0].startswith("channel,param,M,d,p,lambda")


def test_summary_wilson_brackets_rate():
    exp = ExperimentSpec(channel=bsc(0.4), n=12, d=1, eps_target=0.3, trials=40,
                         master_seed=11)
    s = run_experiment(exp)
    assert s.wilson_low <= s.excess_rate <= s.wilson_high
    assert s.excess_rate == s.excess_count / 40
    assert s.seed_constants.startswith("splitmix64:")


def test_csv_header_and_float_width():
    assert ",".join(SUMMARY_CSV_HEADER) == (
        "channel,param,n,d,eps_target,mode,M,delta,trials,excess_count,excess_rate,"
        "wilson_low,wilson_high,mean_max_abs_err,master_seed")
    assert rows_to_csv(("x",), [(0.1,)]) == "x\n0.10000000000000001\n"
    assert rows_to_csv(("x",), [(True,)]) == "x\ntrue\n"


def test_summary_csv_round_trips_fields():
    exp = ExperimentSpec(channel=bsc(0.4), n=12, d=2, eps_target=0.3, trials=25,
                         master_seed=8, m_override=3)
    s = run_experiment(exp)
    text = summaries_to_csv([s])
    header, row = text.splitlines()
    assert header == ",".join(SUMMARY_CSV_HEADER)
    cells = row.split(",")
    assert cells[0] == "bsc"
    assert cells[6] == "3"
    assert int(cells[9]) == s.excess_count


def test_figure_f2_symmetric_at_full_flip():
    table = figure_series("f2_bscC")
    assert table.header == ("param", "q", "mean_nats")
    assert len(table.rows) == 3 * 1001
    curve = [v for prm, _, v in table.rows if prm == 1.0]
    for i in range(1001):
        assert curve[i] == pytest.approx(curve[1000 - i], abs=1e-12)


def test_figure_f3_uses_erasure_family():
    table = figure_series("f3_becC", {"params": (0.5,), "points": 11})
    assert len(table.rows) == 11
    # erasure mean is (1 - param q) h(q), zero at both endpoints
    assert table.rows[0][2] == 0.0
    assert table.rows[-1][2] == 0.0


def test_figure_f4_gain_series_layout():
    table = figure_series("f4_gain", {"ns": (500, 1000)})
    kinds = {(kind, prm) for kind, prm, _, _ in table.rows}
    assert len(kinds) == 6
    assert all(g > 0.0 for _, _, _, g in table.rows)
    ztab = figure_series("f4z_gain", {"ns": (500, 1000)})
    assert {k for k, _, _, _ in ztab.rows} == {"z"}


def test_figure_f5_small_grid():
    table = figure_series("f5_ddim", {"ds": (1,), "ns": (12,), "trials": 50})
    assert table.header == ("d", "n", "theory_bits", "sim_bits", "sim_rate",
                            "wilson_low", "wilson_high")
    (d, n, theory, sim_bits, rate, low, high), = table.rows
    assert (d, n) == (1, 12)
    assert low <= rate <= high
    assert sim_bits > 0.0


def test_figure_f6_joint_theory_dominates():
    table = figure_series("f6_separate", {"ns": (12,), "trials": 30})
    sep = next(r for r in table.rows if r[0] == "separate")
    joint = next(r for r in table.rows if r[0] == "joint")
    assert joint[3] > sep[3]
    assert joint[2] == sep[2]


def test_figure_f1_phase_kinds():
    table = figure_series("f1_phase", {"rates": (0.8, 1.2), "gauss_ns": (10, 20),
                                       "ach_ns": (20,), "conv_ns": (16,),
                                       "q_grid": 21})
    kinds = {k for k, _, _, _ in table.rows}
    assert kinds == {"gauss", "ach", "conv"}
    assert all(0.0 <= prob <= 1.0 for _, _, _, prob in table.rows)


def test_figure_rejects_unknown_ids_and_params():
    with pytest.raises(ValueError):
        figure_series("f9_unknown")
    with pytest.raises(ValueError):
        figure_series("f2_bscC", {"bogus": 1})


def test_figure_thread_count_does_not_change_csv():
    kwargs = {"ds": (1,), "ns": (10,), "trials": 40}
    a = figure_series("f5_ddim", dict(kwargs), threads=1)
    b = figure_series("f5_ddim", dict(kwargs), threads=2)
    assert a.to_csv() == b.to_csv()
