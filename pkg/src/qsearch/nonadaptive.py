"""Fixed-length random-codebook search over the unit cube.

A codebook row is indexed by the flattened bin index (1-based); bit
(row, t) says whether bin `row` is inside the query set at time t. The
channel only ever sees the query set's measure, which for equal-size bins
is the column popcount over M^d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSpec, sample_output_indices
from .errors import ResourceLimitError, format_count
from .infodensity import NEG_INF, info_density_table
from .rng import stream

DEFAULT_ENTRY_BUDGET = 20_000_000

UNIFORM_TARGET = "uniform"


def bin_index(s: float, m: int) -> int:
    """Bin of a coordinate: ceil(s*M), with s=0 clamped into bin 1."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"coordinate must lie in [0, 1], got {s!r}")
    if m < 1:
        raise ValueError(f"bins per dimension must be at least 1, got {m!r}")
    return max(1, math.ceil(s * m))


def bin_center(w: int, m: int) -> float:
    """Center of bin w: (2w - 1) / (2M)."""
    if not 1 <= w <= m:
        raise ValueError(f"bin must lie in [1, {m}], got {w!r}")
    return (2 * w - 1) / (2 * m)


def flatten_index(ws, m: int, d: int) -> int:
    """Row-major flattening of per-dimension bins: 1 + sum (w_j - 1) M^(d-j)."""
    ws = tuple(int(w) for w in ws)
    if len(ws) != d:
        raise ValueError(f"expected {d} bin components, got {len(ws)}")
    out = 0
    for w in ws:
        if not 1 <= w <= m:
            raise ValueError(f"bin component must lie in [1, {m}], got {w!r}")
        out = out * m + (w - 1)
    return out + 1


def unflatten_index(idx: int, m: int, d: int) -> tuple[int, ...]:
    """Inverse of flatten_index."""
    if not 1 <= idx <= m ** d:
        raise ValueError(f"flattened bin must lie in [1, {m ** d}], got {idx!r}")
    rem = idx - 1
    ws = []
    for _ in range(d):
        ws.append(rem % m + 1)
        rem //= m
    return tuple(reversed(ws))


@dataclass(frozen=True, eq=False)
class Codebook:
    """Immutable random codebook plus its exact per-time query fractions."""

    m: int
    d: int
    n: int
    p: float
    bits: np.ndarray
    per_time_fraction: np.ndarray = field(init=False)

    def __post_init__(self):
        rows = self.m ** self.d
        if self.bits.shape != (rows, self.n):
            raise ValueError(f"bit matrix must be {rows} x {self.n}, got {self.bits.shape}")
        counts = self.bits.sum(axis=0, dtype=np.int64)
        object.__setattr__(self, "per_time_fraction", counts / rows)

    @property
    def rows(self) -> int:
        return self.m ** self.d


def _validate_codebook_args(m: int, d: int, n: int, p: float, entry_budget: int):
    if m < 1 or d < 1 or n < 1:
        raise ValueError("bins, dimension, and length must all be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"design fraction must lie in [0, 1], got {p!r}")
    entries = m ** d * n
    if entries > entry_budget:
        raise ResourceLimitError(
            f"codebook needs {format_count(entries)} entries (M^d * n with M={m}, "
            f"d={d}, n={n}), budget is {entry_budget}")


def _draw_bits(rng: np.random.Generator, rows: int, n: int, p: float) -> np.ndarray:
    # one uniform per (row, t), consumed row-major
    return (rng.random((rows, n)) < p).astype(np.uint8)


def generate_codebook(m: int, d: int, n: int, p: float, seed: int,
                      entry_budget: int = DEFAULT_ENTRY_BUDGET) -> Codebook:
    """Deterministic function of its arguments; bit (row, t) is 1 iff the
    (row, t)-th uniform draw falls below p."""
    _validate_codebook_args(m, d, n, p, entry_budget)
    bits = _draw_bits(stream(seed), m ** d, n, p)
    return Codebook(m=m, d=d, n=n, p=p, bits=bits)


def _decode_indices(cb: Codebook, y_idx: np.ndarray, spec: ChannelSpec) -> int:
    """Argmax of the per-row density sum, smallest row on ties.

    Rows are scored through per-symbol one-counts, then every row within
    the count arithmetic's rounding slack of the top score is rescored with
    exact summation, so the winner is the argmax of the real-valued sums no
    matter how the fast path rounds. Distinct count vectors can still be
    mathematically tied (the table cells satisfy algebraic identities), and
    such ties must resolve to the smallest row. A row hitting a
    zero-probability cell is disqualified unless every row is.
    """
    table = info_density_table(spec, cb.p, cb.p)
    k = len(spec.alphabet)
    vals = np.asarray(table.values, dtype=np.float64)  # shape (2, k)
    bad = vals == NEG_INF
    safe = np.where(bad, 0.0, vals)
    onehot = np.zeros((cb.n, k))
    onehot[np.arange(cb.n), y_idx] = 1.0
    totals = onehot.sum(axis=0)  # per-symbol counts in y
    ones = cb.bits.astype(np.float64) @ onehot  # (rows, k), exact integers
    scores = ones @ safe[1] + (totals[None, :] - ones) @ safe[0]
    bad_hits = ones @ bad[1].astype(np.float64) + (totals[None, :] - ones) @ bad[0].astype(np.float64)
    scores = np.where(bad_hits > 0.0, NEG_INF, scores)
    best = float(scores.max())
    if best == NEG_INF:
        return 1
    slack = 16.0 * np.finfo(np.float64).eps * cb.n * (float(np.abs(safe).max()) + 1.0)
    cand = np.flatnonzero(scores >= best - slack)
    if len(cand) == 1:
        return int(cand[0]) + 1
    exact = [math.fsum(vals[cb.bits[r], y_idx]) for r in cand]
    return int(cand[int(np.argmax(exact))]) + 1


def decode(cb: Codebook, ys, spec: ChannelSpec) -> int:
    """Decode a symbol sequence to a flattened bin index in [1, M^d]."""
    if len(ys) != cb.n:
        raise ValueError(f"response length {len(ys)} does not match codebook length {cb.n}")
    y_idx = np.array([spec.symbol_index(y) for y in ys], dtype=np.int64)
    return _decode_indices(cb, y_idx, spec)


@dataclass(frozen=True)
class TrialOutcome:
    """One search trial: ground truth, estimate, and the excess event."""

    true_target: tuple[float, ...]
    estimate: tuple[float, ...]
    max_abs_error: float
    excess: bool
    decoded_bin: int
    true_bin: int


def run_trial(spec: ChannelSpec, m: int, d: int, n: int, p: float, target, seed: int,
              entry_budget: int = DEFAULT_ENTRY_BUDGET) -> TrialOutcome:
    """One end-to-end trial with a fresh codebook.

    Stream order under the trial seed is fixed: codebook bits (row-major),
    then target coordinates when target == "uniform", then one channel
    uniform per query. The excess flag compares the worst coordinate error
    against the bin width 1/M.
    """
    _validate_codebook_args(m, d, n, p, entry_budget)
    rng = stream(seed)
    bits = _draw_bits(rng, m ** d, n, p)
    cb = Codebook(m=m, d=d, n=n, p=p, bits=bits)
    if isinstance(target, str):
        if target != UNIFORM_TARGET:
            raise ValueError(f"unknown target tag {target!r}")
        coords = tuple(float(u) for u in rng.random(d))
    else:
        coords = tuple(float(s) for s in target)
        if len(coords) != d:
            raise ValueError(f"expected {d} target coordinates, got {len(coords)}")
        for s in coords:
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"target coordinate must lie in [0, 1], got {s!r}")
    ws = tuple(bin_index(s, m) for s in coords)
    true_bin = flatten_index(ws, m, d)
    xs = cb.bits[true_bin - 1]
    y_idx = sample_output_indices(spec, cb.per_time_fraction, xs, rng)
    decoded = _decode_indices(cb, y_idx, spec)
    est = tuple(bin_center(w, m) for w in unflatten_index(decoded, m, d))
    err = max(abs(e - s) for e, s in zip(est, coords))
    delta = 1.0 / m
    return TrialOutcome(true_target=coords, estimate=est, max_abs_error=err,
                        excess=err > delta, decoded_bin=decoded, true_bin=true_bin)
