"""Non-asymptotic achievability and converse bounds at desk scale.

Both bounds reduce to the law of an n-fold i.i.d. sum of single-letter
densities. That law is computed exactly: the single-letter support is
collapsed to its distinct density values (at most 4 categories for the
two-symbol flip channels, 3 once erasures collapse), and the sum
distribution is enumerated over multinomial count vectors. Desk-scale n
keeps the enumeration small; a vector budget guards against misuse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .channels import ChannelSpec, continuity_constant, transition_matrix
from .errors import ResourceLimitError
from .infodensity import NEG_INF, info_density_table

DEFAULT_VECTOR_BUDGET = 25_000_000

_COLLAPSE_TOL = 1e-12  # single-letter values closer than this are one category
_ATOM_MERGE_TOL = 1e-9  # sum atoms closer than this are one atom


@dataclass(frozen=True, eq=False)
class SumDistribution:
    """Exact law of the n-fold sum of single-letter densities.

    `values` are sorted ascending with duplicates merged; `probs` are
    normalized; `cum[-1]` is pinned to exactly 1. Arrays are read-only and
    may be shared through a cache.
    """

    q: float
    n: int
    values: np.ndarray
    probs: np.ndarray
    cum: np.ndarray = field(init=False)

    def __post_init__(self):
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        # cumsum of nonnegative terms never decreases, but it can drift a
        # few ulps past 1; clip so pinning the tail keeps the CDF monotone
        cum = np.minimum(np.cumsum(self.probs), 1.0)
        cum[-1] = 1.0
        for arr in (self.values, self.probs, cum):
            arr.setflags(write=False)
        object.__setattr__(self, "cum", cum)

    def cdf(self, t: float) -> float:
        """Pr{sum <= t}."""
        idx = int(np.searchsorted(self.values, t, side="right"))
        return 0.0 if idx == 0 else float(self.cum[idx - 1])


def _composition_rows(total: int, k: int) -> np.ndarray:
    """All length-k nonnegative integer vectors summing to `total`."""
    if k == 1:
        return np.full((1, 1), total, dtype=np.int64)
    if k == 2:
        i = np.arange(total + 1, dtype=np.int64)
        return np.stack([i, total - i], axis=1)
    blocks = []
    for first in range(total + 1):
        rest = _composition_rows(total - first, k - 1)
        col = np.full((rest.shape[0], 1), first, dtype=np.int64)
        blocks.append(np.concatenate([col, rest], axis=1))
    return np.concatenate(blocks, axis=0)


def _collapsed_support(spec: ChannelSpec, q: float, p: float):
    """Distinct single-letter density values and their probabilities.

    Weights follow Bern(p) inputs through the channel at size q; density
    values are always read from the (p, p) table, so passing p != q gives
    the mismatched law the design-probe needs.
    """
    table = info_density_table(spec, p, p)
    tm = transition_matrix(spec, q)
    weights = np.stack([(1.0 - p) * tm[0], p * tm[1]])
    mask = weights > 0.0
    vals = table.values[mask]
    wts = weights[mask]
    order = np.argsort(vals)
    vals, wts = vals[order], wts[order]
    out_v, out_w = [vals[0]], [wts[0]]
    for v, w in zip(vals[1:], wts[1:]):
        if v - out_v[-1] <= _COLLAPSE_TOL:
            out_w[-1] += w
        else:
            out_v.append(v)
            out_w.append(w)
    return np.array(out_v), np.array(out_w)


def _merge_atoms(values: np.ndarray, probs: np.ndarray):
    order = np.argsort(values, kind="stable")
    values, probs = values[order], probs[order]
    if len(values) == 1:
        return values, probs
    # consecutive diffs: (-inf) - (-inf) = nan compares False, keeping the
    # -inf block one group; finite - (-inf) = inf starts a new group
    with np.errstate(invalid="ignore"):
        new_group = np.diff(values) > _ATOM_MERGE_TOL
    starts = np.concatenate([[0], np.nonzero(new_group)[0] + 1])
    return values[starts], np.add.reduceat(probs, starts)


@lru_cache(maxsize=128)
def _sum_distribution_cached(spec: ChannelSpec, q: float, n: int, p: float,
                             max_vectors: int) -> SumDistribution:
    single_v, single_w = _collapsed_support(spec, q, p)
    k = len(single_v)
    count = math.comb(n + k - 1, k - 1)
    if count > max_vectors:
        raise ResourceLimitError(
            f"sum law needs {count} count vectors (n={n}, {k} categories), "
            f"budget is {max_vectors}")
    logw = np.log(single_w)
    neg = single_v == NEG_INF
    finite_v = np.where(neg, 0.0, single_v)
    lg_n = gammaln(n + 1)

    def block(rows: np.ndarray):
        logp = lg_n - gammaln(rows + 1).sum(axis=1) + rows @ logw
        vals = rows @ finite_v
        if neg.any():
            vals = np.where(rows[:, neg].sum(axis=1) > 0, NEG_INF, vals)
        return vals, np.exp(logp)

    if k <= 3 or count <= 2_000_000:
        values, probs = block(_composition_rows(n, k))
    else:
        # stream over the first coordinate to bound peak memory
        v_parts, p_parts = [], []
        for first in range(n + 1):
            rest = _composition_rows(n - first, k - 1)
            col = np.full((rest.shape[0], 1), first, dtype=np.int64)
            bv, bp = block(np.concatenate([col, rest], axis=1))
            v_parts.append(bv)
            p_parts.append(bp)
        values, probs = np.concatenate(v_parts), np.concatenate(p_parts)
    values, probs = _merge_atoms(values, probs)
    probs = probs / probs.sum()
    return SumDistribution(q=q, n=n, values=values, probs=probs)


def sum_distribution(spec: ChannelSpec, q: float, n: int, design_p: float | None = None,
                     max_vectors: int = DEFAULT_VECTOR_BUDGET) -> SumDistribution:
    """Exact n-fold sum law at size fraction q (and input fraction q unless
    design_p overrides it).

    Instances are cached and immutable; do not mutate the returned arrays.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {q!r}")
    if n < 1:
        raise ValueError(f"length must be at least 1, got {n!r}")
    p = q if design_p is None else design_p
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"design fraction must lie in [0, 1], got {p!r}")
    return _sum_distribution_cached(spec, float(q), int(n), float(p), int(max_vectors))


def exact_sum_cdf(spec: ChannelSpec, q: float, n: int, t: float,
                  max_vectors: int = DEFAULT_VECTOR_BUDGET) -> float:
    """Pr{sum of n i.i.d. densities <= t}, exactly."""
    return sum_distribution(spec, q, n, max_vectors=max_vectors).cdf(t)


def distribution_quantile(dist: SumDistribution, level: float) -> float:
    """sup{t : CDF(t) <= level}: the smallest atom whose CDF exceeds level.

    For a level below the first atom's mass this is the first atom (the
    sublevel set is the open ray below it).
    """
    if not 0.0 <= level < 1.0:
        raise ValueError(f"quantile level must lie in [0, 1), got {level!r}")
    idx = int(np.searchsorted(dist.cum, level, side="right"))
    return float(dist.values[idx])


class BoundMode(Enum):
    MD = "md"  # measurement-dependent: keeps both correction terms
    MI = "mi"  # measurement-independent: corrections drop


def default_eta(m: int, d: int) -> float:
    """Deviation radius balancing the codebook concentration terms:
    sqrt(d log M / (2 M^d))."""
    if m < 2 or d < 1:
        raise ValueError("need M >= 2 and d >= 1 for the default radius")
    return math.sqrt(d * math.log(m) / (2.0 * float(m) ** d))


def achievability_bound(spec: ChannelSpec, n: int, d: int, m: int, p: float,
                        eta: float | None = None, mode: BoundMode = BoundMode.MD,
                        max_vectors: int = DEFAULT_VECTOR_BUDGET) -> float:
    """Upper bound on the excess probability of the random-codebook search.

    md mode evaluates
        4n exp(-2 M^d eta^2)
        + exp(n eta c(p)) [Pr{sum <= d log M + log sqrt(n)} + 1/sqrt(n)]
    with c(p) the channel's size-continuity constant and the probability
    from the exact sum law. mi mode keeps only the bracketed term (the
    channel never sees the query size, so no concentration is needed).
    Result clamped to [0, 1].
    """
    if n < 1 or d < 1 or m < 1:
        raise ValueError("n, d, and M must all be at least 1")
    thr = d * math.log(m) + 0.5 * math.log(n)
    core = exact_sum_cdf(spec, p, n, thr, max_vectors=max_vectors) + 1.0 / math.sqrt(n)
    if mode is BoundMode.MI:
        return min(1.0, core)
    if eta is None:
        eta = default_eta(m, d)
    if eta <= 0.0:
        raise ValueError(f"deviation radius must be positive, got {eta!r}")
    additive = 4.0 * n * math.exp(-2.0 * float(m) ** d * eta * eta)
    multiplier = math.exp(n * eta * continuity_constant(spec, p))
    return min(1.0, additive + multiplier * core)


def _validate_converse_params(d: int, eps: float, beta: float, kappa: float) -> float:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"target error must lie in (0, 1), got {eps!r}")
    if not 0.0 < beta < (1.0 - eps) / 2.0:
        raise ValueError(f"beta must lie in (0, (1-eps)/2), got {beta!r}")
    if not 0.0 < kappa < 1.0 - eps - 2.0 * d * beta:
        raise ValueError(
            f"kappa must lie in (0, 1 - eps - 2 d beta), got {kappa!r}")
    return eps + 2.0 * d * beta + kappa


def converse_bound(spec: ChannelSpec, n: int, d: int, eps: float, beta: float,
                   kappa: float, q_grid: int = 201, q_min: float = 1e-3,
                   max_vectors: int = DEFAULT_VECTOR_BUDGET) -> float:
    """Upper bound on the total -d log(resolution) of any procedure with
    excess probability at most eps.

    The maximization over the query fraction runs on a q_grid-point grid
    over [q_min, 1 - q_min]; the margin excludes the degenerate endpoints
    where the sum law collapses.
    """
    level = _validate_converse_params(d, eps, beta, kappa)
    if q_grid < 1:
        raise ValueError(f"grid size must be at least 1, got {q_grid!r}")
    best = -math.inf
    for q in np.linspace(q_min, 1.0 - q_min, q_grid):
        dist = sum_distribution(spec, float(q), n, max_vectors=max_vectors)
        best = max(best, distribution_quantile(dist, level))
    return -d * math.log(beta) - math.log(kappa) + best


def converse_error_floors(spec: ChannelSpec, n: int, d: int, total_log_ms,
                          beta: float, kappa: float, q_grid: int = 101,
                          q_min: float = 1e-3,
                          max_vectors: int = DEFAULT_VECTOR_BUDGET) -> tuple[float, ...]:
    """Smallest excess probability consistent with the converse at each
    total resolution exponent in `total_log_ms` (nats).

    Shares one sum law per grid fraction across all exponents. A floor of 0
    means the converse does not constrain that exponent at this n.
    """
    if beta <= 0.0 or kappa <= 0.0:
        raise ValueError("beta and kappa must be positive")
    targets = [t + d * math.log(beta) + math.log(kappa) for t in total_log_ms]
    best_levels = [1.0] * len(targets)
    for q in np.linspace(q_min, 1.0 - q_min, q_grid):
        dist = sum_distribution(spec, float(q), n, max_vectors=max_vectors)
        for i, t_star in enumerate(targets):
            j = int(np.searchsorted(dist.values, t_star - 1e-12, side="left"))
            if j >= len(dist.values):
                continue  # no atom reaches the target; this q cannot witness it
            level = 0.0 if j == 0 else float(dist.cum[j - 1])
            best_levels[i] = min(best_levels[i], level)
    return tuple(min(1.0, max(0.0, lv - 2.0 * d * beta - kappa)) for lv in best_levels)


def achievability_probability_probe(spec: ChannelSpec, n: int, d: int, m: int, p: float,
                                    seed: int, outer: int = 10_000,
                                    max_vectors: int = DEFAULT_VECTOR_BUDGET) -> float:
    """Monte Carlo refinement of the probability term in the md bound.

    Each outer sample draws the per-time query fractions a fresh codebook
    would induce (Binomial(M^d, p) popcounts); the conditional probability
    is then evaluated with the exact sum law at the sample's mean fraction.
    The heterogeneous conditional law is approximated by that mean-fraction
    surrogate, so this is a tightness probe, not a certified bound.
    """
    from .rng import stream  # local import: bounds is otherwise deterministic

    if outer < 1:
        raise ValueError(f"outer sample count must be at least 1, got {outer!r}")
    rows = m ** d
    rng = stream(seed)
    thr = d * math.log(m) + 0.5 * math.log(n)
    total = 0.0
    for _ in range(outer):
        counts = rng.binomial(rows, p, size=n)
        q_bar = float(counts.sum()) / (rows * n)
        dist = sum_distribution(spec, q_bar, n, design_p=p, max_vectors=max_vectors)
        total += dist.cdf(thr)
    return total / outer
