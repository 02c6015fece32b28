"""Monte Carlo experiment orchestration and figure-data emission.

Reproducibility contract: every summary is a deterministic function of its
experiment description. Per-trial seeds are derived from the master seed
with the published mixing constants, trials are reduced in index order,
and float CSV fields use 17 significant digits, so reruns are
byte-identical regardless of worker count. Wall-clock time is reported on
the summary object but never serialized.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

from .adaptive import AdaptiveConfig, run_adaptive_session
from .asymptotics import gaussian_cdf, gaussian_quantile
from .bounds import achievability_bound, converse_error_floors
from .capacity import capacity, dispersion, mean_info_density
from .channels import ChannelSpec, bec, bsc, z_channel
from .errors import ResourceLimitError, format_count
from .nonadaptive import DEFAULT_ENTRY_BUDGET, UNIFORM_TARGET, run_trial
from .rng import SEED_MIX_CONSTANTS, mix_seed

_LN2 = math.log(2.0)


class ExperimentMode(Enum):
    JOINT = "joint"
    SEPARATE = "separate"
    ADAPTIVE = "adaptive"


class MarginRule(Enum):
    NONE = "none"
    MINUS_HALF_LOG_N = "minusHalfLogN"


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte Carlo experiment.

    `target` is the tag "uniform" or a fixed coordinate tuple. `m_override`
    pins the grid size instead of the second-order recipe (used to compare
    modes at matched resolution). `adaptive_threshold`/`adaptive_max_steps`
    configure adaptive mode; the threshold defaults to
    log((M^d - 1) / eps_target), which makes the design error bound equal
    the target.
    """

    channel: ChannelSpec
    n: int
    d: int
    eps_target: float
    trials: int
    master_seed: int
    mode: ExperimentMode = ExperimentMode.JOINT
    margin_rule: MarginRule = MarginRule.NONE
    target: object = UNIFORM_TARGET
    m_override: int | None = None
    adaptive_threshold: float | None = None
    adaptive_max_steps: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trial count must be at least 1, got {self.trials!r}")
        if not 0.0 < self.eps_target < 1.0:
            raise ValueError(f"target error must lie in (0, 1), got {self.eps_target!r}")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be at least 1")
        if self.m_override is not None and self.m_override < 2:
            raise ValueError(f"grid override must be at least 2, got {self.m_override!r}")


@dataclass(frozen=True)
class ResolutionChoice:
    """Grid size from the second-order recipe, with the raw exponent.

    `clamped` flags a nonpositive (or sub-log-2) exponent forced up to the
    minimum usable grid M=2.
    """

    m: int
    clamped: bool
    exponent: float


@dataclass(frozen=True)
class ExperimentSummary:
    """Outcome statistics plus everything needed to reproduce them."""

    experiment: ExperimentSpec
    m: int
    delta: float
    excess_count: int
    excess_rate: float
    wilson_low: float
    wilson_high: float
    mean_max_abs_error: float
    mean_stop_time: float | None
    remainder_queries: int
    seed_constants: str
    elapsed_seconds: float


def choose_resolution_m(spec: ChannelSpec, n: int, d: int, eps: float,
                        margin_rule: MarginRule = MarginRule.NONE) -> ResolutionChoice:
    """Grid size M = max(2, floor(exp((1/d)(nC + sqrt(nV) quantile - margin))))."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be at least 1")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"target error must lie in (0, 1), got {eps!r}")
    c = capacity(spec).capacity
    v = dispersion(spec, eps)
    margin = 0.5 * math.log(n) if margin_rule is MarginRule.MINUS_HALF_LOG_N else 0.0
    exponent = (n * c + math.sqrt(n * v) * gaussian_quantile(eps) - margin) / d
    raw = math.floor(math.exp(exponent))
    return ResolutionChoice(m=max(2, raw), clamped=raw < 2, exponent=exponent)


def wilson_interval(k: int, n: int, conf: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= successes <= trials >= 1, got k={k!r}, n={n!r}")
    z = gaussian_quantile(1.0 - (1.0 - conf) / 2.0)
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n)) / denom
    low = 0.0 if k == 0 else max(0.0, center - half)
    high = 1.0 if k == n else min(1.0, center + half)
    return low, high


def _design_fraction(spec: ChannelSpec) -> float:
    return capacity(spec).achievers[0]


def _resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ValueError(f"thread count must be nonnegative, got {threads!r}")
    return threads if threads > 0 else min(8, os.cpu_count() or 1)


def _map_trials(fn, indices, threads: int):
    workers = _resolve_threads(threads)
    if workers == 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices))


def run_experiment(exp: ExperimentSpec, threads: int = 1,
                   entry_budget: int = DEFAULT_ENTRY_BUDGET) -> ExperimentSummary:
    """Run the experiment and summarize; deterministic given `exp`."""
    start = time.monotonic()
    spec = exp.channel
    p = _design_fraction(spec)
    stop_times = None
    remainder = 0

    if exp.mode is ExperimentMode.SEPARATE:
        n_dim = exp.n // exp.d
        if n_dim < 1:
            raise ValueError(f"separate mode needs n >= d, got n={exp.n}, d={exp.d}")
        remainder = exp.n - n_dim * exp.d
        eps_dim = exp.eps_target / exp.d
        m = exp.m_override if exp.m_override is not None else choose_resolution_m(
            spec, n_dim, 1, eps_dim, exp.margin_rule).m
        if m * n_dim > entry_budget:
            raise ResourceLimitError(
                f"per-dimension codebook needs {format_count(m * n_dim)} entries, budget is "
                f"{entry_budget}; reduce n or use the half-log margin rule")

        def one_trial(i: int):
            base = mix_seed(exp.master_seed, i)
            worst = 0.0
            excess = False
            for j in range(exp.d):
                tgt = exp.target if isinstance(exp.target, str) else (exp.target[j],)
                out = run_trial(spec, m, 1, n_dim, p, tgt, mix_seed(base, j),
                                entry_budget=entry_budget)
                worst = max(worst, out.max_abs_error)
                excess = excess or out.excess
            return excess, worst

        results = _map_trials(one_trial, range(exp.trials), threads)

    elif exp.mode is ExperimentMode.ADAPTIVE:
        m = exp.m_override if exp.m_override is not None else choose_resolution_m(
            spec, exp.n, exp.d, exp.eps_target, exp.margin_rule).m
        rows = m ** exp.d
        if rows > entry_budget:
            raise ResourceLimitError(
                f"adaptive session needs {format_count(rows)} hypotheses, budget is "
                f"{entry_budget}; reduce n or use the half-log margin rule")
        threshold = exp.adaptive_threshold
        if threshold is None:
            threshold = max(0.0, math.log((rows - 1) / exp.eps_target)) if rows > 1 else 0.0

        def one_trial(i: int):
            cfg = AdaptiveConfig(m=m, d=exp.d, p=p, threshold=threshold,
                                 max_steps=exp.adaptive_max_steps,
                                 seed=mix_seed(exp.master_seed, i))
            out = run_adaptive_session(spec, cfg, exp.target, entry_budget=entry_budget)
            return out.excess, out.max_abs_error, out.stop_time

        triples = _map_trials(one_trial, range(exp.trials), threads)
        results = [(e, w) for e, w, _ in triples]
        stop_times = [s for _, _, s in triples]

    else:
        m = exp.m_override if exp.m_override is not None else choose_resolution_m(
            spec, exp.n, exp.d, exp.eps_target, exp.margin_rule).m
        if m ** exp.d * exp.n > entry_budget:
            raise ResourceLimitError(
                f"codebook needs {format_count(m ** exp.d * exp.n)} entries, budget is "
                f"{entry_budget}; reduce n or use the half-log margin rule")

        def one_trial(i: int):
            out = run_trial(spec, m, exp.d, exp.n, p, exp.target,
                            mix_seed(exp.master_seed, i), entry_budget=entry_budget)
            return out.excess, out.max_abs_error

        results = _map_trials(one_trial, range(exp.trials), threads)

    excess_count = sum(1 for e, _ in results if e)
    rate = excess_count / exp.trials
    low, high = wilson_interval(excess_count, exp.trials)
    mean_err = math.fsum(w for _, w in results) / exp.trials
    mean_stop = math.fsum(stop_times) / exp.trials if stop_times is not None else None
    return ExperimentSummary(
        experiment=exp, m=m, delta=1.0 / m, excess_count=excess_count,
        excess_rate=rate, wilson_low=low, wilson_high=high,
        mean_max_abs_error=mean_err, mean_stop_time=mean_stop,
        remainder_queries=remainder, seed_constants=SEED_MIX_CONSTANTS,
        elapsed_seconds=time.monotonic() - start)


SUMMARY_CSV_HEADER = ("channel", "param", "n", "d", "eps_target", "mode", "M", "delta",
                      "trials", "excess_count", "excess_rate", "wilson_low",
                      "wilson_high", "mean_max_abs_err", "master_seed")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def summary_csv_row(s: ExperimentSummary) -> tuple:
    e = s.experiment
    return (e.channel.kind.value, e.channel.param, e.n, e.d, e.eps_target,
            e.mode.value, s.m, s.delta, e.trials, s.excess_count, s.excess_rate,
            s.wilson_low, s.wilson_high, s.mean_max_abs_error, e.master_seed)


def rows_to_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def summaries_to_csv(summaries) -> str:
    return rows_to_csv(SUMMARY_CSV_HEADER, [summary_csv_row(s) for s in summaries])


ADAPTIVE_CSV_HEADER = ("channel", "param", "M", "d", "p", "lambda", "trials",
                       "excess_count", "excess_rate", "wilson_low", "wilson_high",
                       "mean_stop_time", "mean_max_abs_err", "truncated_count",
                       "master_seed")


@dataclass(frozen=True)
class AdaptiveBatchSummary:
    """Statistics over independent sequential sessions."""

    channel: ChannelSpec
    m: int
    d: int
    p: float
    threshold: float
    trials: int
    master_seed: int
    excess_count: int
    excess_rate: float
    wilson_low: float
    wilson_high: float
    mean_stop_time: float
    mean_max_abs_error: float
    truncated_count: int
    seed_constants: str
    elapsed_seconds: float

    def to_csv(self) -> str:
        row = (self.channel.kind.value, self.channel.param, self.m, self.d, self.p,
               self.threshold, self.trials, self.excess_count, self.excess_rate,
               self.wilson_low, self.wilson_high, self.mean_stop_time,
               self.mean_max_abs_error, self.truncated_count, self.master_seed)
        return rows_to_csv(ADAPTIVE_CSV_HEADER, [row])


def run_adaptive_batch(spec: ChannelSpec, m: int, d: int, p: float, threshold: float,
                       trials: int, master_seed: int, max_steps: int | None = None,
                       target=UNIFORM_TARGET, threads: int = 1,
                       entry_budget: int = DEFAULT_ENTRY_BUDGET) -> AdaptiveBatchSummary:
    """Independent sequential sessions with per-trial derived seeds."""
    if trials < 1:
        raise ValueError(f"trial count must be at least 1, got {trials!r}")
    start = time.monotonic()
    rows = m ** d
    if rows > entry_budget:
        raise ResourceLimitError(
            f"adaptive session needs {format_count(rows)} hypotheses, budget is {entry_budget}")
    steps = max_steps
    if steps is None:
        from .adaptive import mismatched_capacity

        c1 = mismatched_capacity(spec, m, d, p)
        if c1 <= 0.0:
            raise ValueError("default step cap needs a positive per-step density "
                             "mean; set max_steps explicitly")
        steps = max(1, math.ceil(50.0 * threshold / c1))

    def one_session(i: int):
        cfg = AdaptiveConfig(m=m, d=d, p=p, threshold=threshold, max_steps=steps,
                             seed=mix_seed(master_seed, i))
        out = run_adaptive_session(spec, cfg, target, entry_budget=entry_budget)
        return out.excess, out.max_abs_error, out.stop_time, out.truncated

    outcomes = _map_trials(one_session, range(trials), threads)
    excess_count = sum(1 for e, _, _, _ in outcomes if e)
    low, high = wilson_interval(excess_count, trials)
    return AdaptiveBatchSummary(
        channel=spec, m=m, d=d, p=p, threshold=threshold, trials=trials,
        master_seed=master_seed, excess_count=excess_count,
        excess_rate=excess_count / trials, wilson_low=low, wilson_high=high,
        mean_stop_time=math.fsum(s for _, _, s, _ in outcomes) / trials,
        mean_max_abs_error=math.fsum(w for _, w, _, _ in outcomes) / trials,
        truncated_count=sum(1 for _, _, _, t in outcomes if t),
        seed_constants=SEED_MIX_CONSTANTS,
        elapsed_seconds=time.monotonic() - start)


@dataclass(frozen=True)
class FigureTable:
    """One figure's data: a header and value rows, CSV-serializable."""

    figure_id: str
    header: tuple[str, ...]
    rows: tuple[tuple, ...]

    def to_csv(self) -> str:
        return rows_to_csv(self.header, self.rows)


FIGURE_IDS = ("f1_phase", "f2_bscC", "f3_becC", "f4_gain", "f4z_gain",
              "f5_ddim", "f6_separate")

_FIGURE_DEFAULTS = {
    "f1_phase": {"channel": "bsc", "param": 0.2, "d": 2,
                 "rates": (0.8, 0.9, 1.1, 1.2),
                 "gauss_ns": tuple(range(2, 201, 2)),
                 "ach_ns": tuple(range(10, 201, 10)),
                 "conv_ns": tuple(range(8, 65, 8)),
                 "beta_kappa_rule": "inv_sqrt_n", "q_grid": 101},
    "f2_bscC": {"params": (0.2, 0.5, 1.0), "points": 1001},
    "f3_becC": {"params": (0.2, 0.5, 1.0), "points": 1001},
    "f4_gain": {"eps": 0.001, "d": 2,
                "bsc_params": (0.2, 0.5, 0.8), "bec_params": (0.2, 0.5, 0.8),
                "ns": tuple(range(100, 10001, 100))},
    "f4z_gain": {"eps": 0.001, "d": 2, "z_params": (0.2, 0.5, 0.8),
                 "ns": tuple(range(100, 10001, 100))},
    "f5_ddim": {"channel": "bsc", "param": 0.4, "eps": 0.1,
                "ds": (1, 2, 3), "ns": (20, 30, 40, 50, 60),
                "trials": 1000, "seed": 20260814, "margin": "none"},
    "f6_separate": {"channel": "bsc", "param": 0.4, "eps": 0.1, "d": 2,
                    "ns": (40, 60), "trials": 10000, "seed": 20260814,
                    "margin": "none"},
}

_CHANNEL_FACTORIES = {"bsc": bsc, "bec": bec, "z": z_channel}


def _figure_params(figure_id: str, params: dict | None) -> dict:
    if figure_id not in _FIGURE_DEFAULTS:
        raise ValueError(f"unknown figure id {figure_id!r}; known: {', '.join(FIGURE_IDS)}")
    merged = dict(_FIGURE_DEFAULTS[figure_id])
    for key, value in (params or {}).items():
        if key not in merged:
            raise ValueError(f"unknown parameter {key!r} for figure {figure_id}")
        merged[key] = value
    return merged


def _f1_phase(p: dict) -> FigureTable:
    spec = _CHANNEL_FACTORIES[p["channel"]](p["param"])
    d = p["d"]
    rep = capacity(spec)
    c, v = rep.capacity, rep.v_low
    p_star = rep.achievers[0]
    rows = []
    for r in p["rates"]:
        for n in p["gauss_ns"]:
            arg_num = (r - 1.0) * n * c
            if v > 0.0:
                prob = gaussian_cdf(arg_num / math.sqrt(n * v))
            else:
                prob = 0.5 if arg_num == 0.0 else (1.0 if arg_num > 0.0 else 0.0)
            rows.append(("gauss", r, n, prob))
        for n in p["ach_ns"]:
            m = math.floor(math.exp(r * n * c / d))
            if m < 2:
                continue
            rows.append(("ach", r, n, achievability_bound(spec, n, d, m, p_star)))
    for n in p["conv_ns"]:
        bk = 1.0 / math.sqrt(n)
        floors = converse_error_floors(spec, n, d, [r * n * c for r in p["rates"]],
                                       beta=bk, kappa=bk, q_grid=p["q_grid"])
        for r, fl in zip(p["rates"], floors):
            rows.append(("conv", r, n, fl))
    return FigureTable("f1_phase", ("kind", "rate", "n", "prob"), tuple(rows))


def _mean_curve(figure_id: str, factory, params, points: int) -> FigureTable:
    rows = []
    for prm in params:
        spec = factory(prm)
        for i in range(points):
            q = i / (points - 1)
            rows.append((prm, q, mean_info_density(spec, q)))
    return FigureTable(figure_id, ("param", "q", "mean_nats"), tuple(rows))


def _f4(figure_id: str, p: dict) -> FigureTable:
    from .asymptotics import adaptivity_gain_lb

    series = []
    if figure_id == "f4_gain":
        series += [("bsc", prm) for prm in p["bsc_params"]]
        series += [("bec", prm) for prm in p["bec_params"]]
    else:
        series += [("z", prm) for prm in p["z_params"]]
    rows = []
    for kind, prm in series:
        spec = _CHANNEL_FACTORIES[kind](prm)
        for n in p["ns"]:
            rows.append((kind, prm, n, adaptivity_gain_lb(spec, n, p["d"], p["eps"])))
    return FigureTable(figure_id, ("channel", "param", "n", "gain_nats"), tuple(rows))


def _margin_rule(tag: str) -> MarginRule:
    return MarginRule.MINUS_HALF_LOG_N if tag == "halflog" else MarginRule.NONE


def _f5(p: dict, threads: int) -> FigureTable:
    from .asymptotics import LogWindow, ResolutionMode, SecondOrderQuery, joint_resolution

    spec = _CHANNEL_FACTORIES[p["channel"]](p["param"])
    eps = p["eps"]
    rows = []
    for d in p["ds"]:
        for n in p["ns"]:
            theory = joint_resolution(spec, SecondOrderQuery(
                n=n, d=d, eps=eps, mode=ResolutionMode.JOINT,
                include_log_term=LogWindow.NONE))
            summary = run_experiment(ExperimentSpec(
                channel=spec, n=n, d=d, eps_target=eps, trials=p["trials"],
                master_seed=mix_seed(p["seed"], 1000 * d + n),
                margin_rule=_margin_rule(p["margin"])), threads=threads)
            rows.append((d, n, theory / _LN2, math.log2(summary.m), summary.excess_rate,
                         summary.wilson_low, summary.wilson_high))
    return FigureTable("f5_ddim",
                       ("d", "n", "theory_bits", "sim_bits", "sim_rate",
                        "wilson_low", "wilson_high"), tuple(rows))


def _f6(p: dict, threads: int) -> FigureTable:
    from .asymptotics import (LogWindow, ResolutionMode, SecondOrderQuery,
                              joint_resolution, separate_resolution)

    spec = _CHANNEL_FACTORIES[p["channel"]](p["param"])
    eps, d = p["eps"], p["d"]
    rows = []
    for n in p["ns"]:
        joint_theory = joint_resolution(spec, SecondOrderQuery(
            n=n, d=d, eps=eps, mode=ResolutionMode.JOINT, include_log_term=LogWindow.NONE))
        sep_theory = separate_resolution(spec, SecondOrderQuery(
            n=n, d=d, eps=eps, mode=ResolutionMode.SEPARATE, include_log_term=LogWindow.NONE))
        m_sep = choose_resolution_m(spec, n // d, 1, eps / d, _margin_rule(p["margin"])).m
        for mode, theory in ((ExperimentMode.SEPARATE, sep_theory),
                             (ExperimentMode.JOINT, joint_theory)):
            summary = run_experiment(ExperimentSpec(
                channel=spec, n=n, d=d, eps_target=eps, trials=p["trials"],
                master_seed=mix_seed(p["seed"], n), mode=mode,
                margin_rule=_margin_rule(p["margin"]), m_override=m_sep),
                threads=threads)
            rows.append((mode.value, n, m_sep, theory / _LN2, math.log2(m_sep),
                         summary.excess_rate, summary.wilson_low, summary.wilson_high))
    return FigureTable("f6_separate",
                       ("mode", "n", "M", "theory_bits", "sim_bits", "sim_rate",
                        "wilson_low", "wilson_high"), tuple(rows))


def figure_series(figure_id: str, params: dict | None = None,
                  threads: int = 1) -> FigureTable:
    """Data table for one figure id; params override documented defaults."""
    p = _figure_params(figure_id, params)
    if figure_id == "f1_phase":
        return _f1_phase(p)
    if figure_id == "f2_bscC":
        return _mean_curve("f2_bscC", bsc, p["params"], p["points"])
    if figure_id == "f3_becC":
        return _mean_curve("f3_becC", bec, p["params"], p["points"])
    if figure_id in ("f4_gain", "f4z_gain"):
        return _f4(figure_id, p)
    if figure_id == "f5_ddim":
        return _f5(p, threads)
    return _f6(p, threads)
