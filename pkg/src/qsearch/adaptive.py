"""Sequential search with per-hypothesis stopping scores.

Codewords are extended lazily: at each step every hypothesis draws one
fresh Bernoulli(p) bit, the query is the set of hypotheses whose bit is 1,
and the channel sees that set's fraction. Every hypothesis keeps a running
density score; the session stops the first time any score reaches the
threshold. A hard step cap keeps sessions finite; hitting it is reported,
never hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .channels import ChannelSpec, sample_output_indices, transition_matrices, transition_matrix
from .errors import ResourceLimitError, format_count
from .infodensity import NEG_INF, info_density_table
from .nonadaptive import DEFAULT_ENTRY_BUDGET, UNIFORM_TARGET, bin_center, bin_index, flatten_index, unflatten_index
from .rng import stream


@dataclass(frozen=True)
class AdaptiveConfig:
    """Session design: grid size, bit bias, stop threshold, step cap.

    `threshold` is in nats and may be 0 (stop as soon as any score is
    nonnegative). `max_steps=None` defers to the default cap
    ceil(50 * threshold / C1) resolved against the channel at run time.
    """

    m: int
    d: int
    p: float
    threshold: float
    max_steps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.d < 1:
            raise ValueError("grid size and dimension must be at least 1")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"bit bias must lie in [0, 1], got {self.p!r}")
        if self.threshold < 0.0:
            raise ValueError(f"threshold must be nonnegative, got {self.threshold!r}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError(f"step cap must be at least 1, got {self.max_steps!r}")


@dataclass(frozen=True)
class AdaptiveOutcome:
    """One session: estimate, stopping step, and the excess event.

    `stop_time=0` with `decoded_bin=0` marks a dropped session (no queries
    posed). `truncated` implies `stop_time == max_steps`.
    """

    true_target: tuple[float, ...]
    estimate: tuple[float, ...]
    max_abs_error: float
    excess: bool
    stop_time: int
    decoded_bin: int
    truncated: bool


def uniform_info_bound(spec: ChannelSpec, q: float) -> float:
    """Largest single-letter density value carrying positive probability."""
    table = info_density_table(spec, q, q)
    tm = transition_matrix(spec, q)
    weights = np.stack([(1.0 - q) * tm[0], q * tm[1]])
    return float(table.values[weights > 0.0].max())


def mismatched_capacity(spec: ChannelSpec, m: int, d: int, p: float) -> float:
    """Mean per-step density under the true lazy-codeword query law.

    The query fraction seen by the channel at a step is (x + K) / M^d with
    K ~ Binomial(M^d - 1, p) the other hypotheses' popcount, while the
    score uses the fixed (p, p) table. Exact binomial summation, truncated
    where the tail mass drops below 1e-12 per side.
    """
    if m < 1 or d < 1:
        raise ValueError("grid size and dimension must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"bit bias must lie in [0, 1], got {p!r}")
    rows = m ** d
    table = info_density_table(spec, p, p)
    bern = (1.0 - p, p)
    if rows > 1:
        lo = int(binom.ppf(1e-13, rows - 1, p))
        hi = int(binom.ppf(1.0 - 1e-13, rows - 1, p))
        ks = np.arange(lo, hi + 1)
        w = binom.pmf(ks, rows - 1, p)
    else:
        ks = np.array([0])
        w = np.array([1.0])
    total = 0.0
    for x in (0, 1):
        if bern[x] == 0.0:
            continue
        tms = transition_matrices(spec, (x + ks) / rows)
        cells = tms[:, x, :]
        vx = table.values[x]
        if np.any((cells > 0.0) & (vx == NEG_INF)[None, :]):
            return NEG_INF
        safe = np.where(vx == NEG_INF, 0.0, vx)
        total += bern[x] * float(w @ (cells @ safe))
    return total


def adaptive_design_bounds(m: int, d: int, threshold: float, a0: float,
                           c1: float) -> tuple[float, float]:
    """(mean stop-time upper bound, excess-probability upper bound).

    Mean bound (threshold + a0) / c1 from optional stopping; error bound
    (M^d - 1) exp(-threshold), clamped to 1.
    """
    if c1 <= 0.0:
        raise ValueError(f"per-step density mean must be positive, got {c1!r}")
    mean_ub = (threshold + a0) / c1
    error_ub = min(1.0, (m ** d - 1) * math.exp(-threshold))
    return mean_ub, error_ub


def _resolve_max_steps(spec: ChannelSpec, cfg: AdaptiveConfig) -> int:
    if cfg.max_steps is not None:
        return cfg.max_steps
    c1 = mismatched_capacity(spec, cfg.m, cfg.d, cfg.p)
    if c1 <= 0.0:
        raise ValueError(
            "default step cap needs a positive per-step density mean; "
            "set max_steps explicitly")
    return max(1, math.ceil(50.0 * cfg.threshold / c1))


def _resolve_target(cfg: AdaptiveConfig, target, rng) -> tuple[float, ...]:
    if isinstance(target, str):
        if target != UNIFORM_TARGET:
            raise ValueError(f"unknown target tag {target!r}")
        return tuple(float(u) for u in rng.random(cfg.d))
    coords = tuple(float(s) for s in target)
    if len(coords) != cfg.d:
        raise ValueError(f"expected {cfg.d} target coordinates, got {len(coords)}")
    for s in coords:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"target coordinate must lie in [0, 1], got {s!r}")
    return coords


def run_adaptive_session(spec: ChannelSpec, cfg: AdaptiveConfig, target,
                         entry_budget: int = DEFAULT_ENTRY_BUDGET) -> AdaptiveOutcome:
    """One sequential session.

    Stream order under the session seed: target coordinates when target is
    "uniform", then per step the M^d hypothesis bits followed by one
    channel uniform. Stopping picks the largest hypothesis index whose
    score reached the threshold; a capped session decodes the best current
    score with smallest-index ties.
    """
    rows = cfg.m ** cfg.d
    if rows > entry_budget:
        raise ResourceLimitError(
            f"session needs {format_count(rows)} hypotheses (M^d = {cfg.m}^{cfg.d}), "
            f"budget is {entry_budget}")
    cap = _resolve_max_steps(spec, cfg)
    rng = stream(cfg.seed)
    coords = _resolve_target(cfg, target, rng)
    true_bin = flatten_index(tuple(bin_index(s, cfg.m) for s in coords), cfg.m, cfg.d)
    table = info_density_table(spec, cfg.p, cfg.p)
    vals = table.values
    scores = np.zeros(rows)
    decoded = 1
    stop_time = cap
    truncated = True
    for t in range(1, cap + 1):
        bits = rng.random(rows) < cfg.p
        fraction = float(bits.sum()) / rows
        x = int(bits[true_bin - 1])
        y_idx = int(sample_output_indices(
            spec, np.array([fraction]), np.array([x]), rng)[0])
        scores += np.where(bits, vals[1, y_idx], vals[0, y_idx])
        if scores.max() >= cfg.threshold:
            stoppers = np.nonzero(scores >= cfg.threshold)[0]
            decoded = int(stoppers[-1]) + 1
            stop_time = t
            truncated = False
            break
    if truncated:
        decoded = int(np.argmax(scores)) + 1
    est = tuple(bin_center(w, cfg.m) for w in unflatten_index(decoded, cfg.m, cfg.d))
    err = max(abs(e - s) for e, s in zip(est, coords))
    return AdaptiveOutcome(true_target=coords, estimate=est, max_abs_error=err,
                           excess=err > 1.0 / cfg.m, stop_time=stop_time,
                           decoded_bin=decoded, truncated=truncated)


def dropout_session(spec: ChannelSpec, cfg: AdaptiveConfig, eps_drop: float, target,
                    rng, entry_budget: int = DEFAULT_ENTRY_BUDGET) -> AdaptiveOutcome:
    """Session wrapper that poses no queries with probability eps_drop.

    The drop coin comes from the caller's `rng`; eps_drop=0 delegates
    without consuming it, so it is bit-identical to run_adaptive_session.
    A dropped session reports the cube center, stop_time 0, and
    decoded_bin 0; its target still comes from the session stream so the
    excess flag is well defined.
    """
    if not 0.0 <= eps_drop <= 1.0:
        raise ValueError(f"drop probability must lie in [0, 1], got {eps_drop!r}")
    if eps_drop > 0.0 and float(rng.random()) < eps_drop:
        coords = _resolve_target(cfg, target, stream(cfg.seed))
        est = (0.5,) * cfg.d
        err = max(abs(e - s) for e, s in zip(est, coords))
        return AdaptiveOutcome(true_target=coords, estimate=est, max_abs_error=err,
                               excess=err > 1.0 / cfg.m, stop_time=0,
                               decoded_bin=0, truncated=False)
    return run_adaptive_session(spec, cfg, target, entry_budget=entry_budget)
