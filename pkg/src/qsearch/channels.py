"""Measurement-dependent binary-input channel families.

A channel family maps a query-size fraction q in [0, 1] to a 2 x K row
stochastic matrix over a fixed ordered output alphabet. Three parametric
families are provided, each with noise scaling linearly in q:

- BSC(nu):  output flips with probability nu*q; alphabet (0, 1).
- BEC(tau): output erased with probability tau*q; alphabet (0, 1, 'e').
- Z(zeta):  input 0 passes clean, input 1 flips to 0 with probability
            zeta*q; alphabet (0, 1).

A fourth kind wraps a fixed stochastic matrix that ignores q (a
measurement-independent channel).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

ERASURE = "e"


class ChannelKind(Enum):
    BSC = "bsc"
    BEC = "bec"
    Z = "z"
    FIXED = "fixed"


@dataclass(frozen=True)
class ChannelSpec:
    """Immutable description of one channel family.

    `param` is nu, tau, or zeta for the parametric kinds and unused for
    FIXED. `matrix` (FIXED only) is the 2 x K transition matrix stored as
    nested tuples so the spec stays hashable. `alphabet` is the ordered
    output alphabet; its order fixes sampling and serialization.
    """

    kind: ChannelKind
    param: float = 0.0
    matrix: tuple[tuple[float, ...], ...] | None = None
    alphabet: tuple = (0, 1)

    def __post_init__(self):
        if self.kind is ChannelKind.FIXED:
            if self.matrix is None:
                raise ValueError("FIXED kind requires a transition matrix")
            if len(self.matrix) != 2:
                raise ValueError("transition matrix must have 2 rows (binary input)")
            for row in self.matrix:
                if len(row) != len(self.alphabet):
                    raise ValueError("matrix row length must match alphabet size")
                if any(v < 0.0 or v > 1.0 for v in row):
                    raise ValueError("transition probabilities must lie in [0, 1]")
                if abs(math.fsum(row) - 1.0) > 1e-9:
                    raise ValueError(f"matrix row must sum to 1, got {math.fsum(row)!r}")
        else:
            if not 0.0 <= self.param <= 1.0:
                raise ValueError(f"channel parameter must lie in [0, 1], got {self.param!r}")
            if self.matrix is not None:
                raise ValueError("parametric kinds take no matrix")

    def symbol_index(self, y) -> int:
        try:
            return self.alphabet.index(y)
        except ValueError:
            raise ValueError(f"symbol {y!r} not in output alphabet {self.alphabet!r}") from None


def bsc(nu: float) -> ChannelSpec:
    """Symmetric flip family: crossover probability nu*q."""
    return ChannelSpec(ChannelKind.BSC, nu, alphabet=(0, 1))


def bec(tau: float) -> ChannelSpec:
    """Erasure family: erasure probability tau*q; alphabet order fixed (0, 1, e)."""
    return ChannelSpec(ChannelKind.BEC, tau, alphabet=(0, 1, ERASURE))


def z_channel(zeta: float) -> ChannelSpec:
    """One-sided flip family: 1 -> 0 with probability zeta*q, 0 never flips."""
    return ChannelSpec(ChannelKind.Z, zeta, alphabet=(0, 1))


def fixed(matrix, alphabet=None) -> ChannelSpec:
    """Measurement-independent channel with a constant 2 x K matrix."""
    rows = tuple(tuple(float(v) for v in row) for row in matrix)
    if alphabet is None:
        alphabet = tuple(range(len(rows[0]))) if rows else ()
    return ChannelSpec(ChannelKind.FIXED, 0.0, matrix=rows, alphabet=tuple(alphabet))


def transition_matrices(spec: ChannelSpec, qs) -> np.ndarray:
    """Stack of 2 x K transition matrices for an array of size fractions.

    Returns shape (len(qs), 2, K). Every row sums to 1 exactly up to float
    rounding of the closed forms.
    """
    qs = np.asarray(qs, dtype=np.float64)
    if qs.ndim != 1:
        raise ValueError("qs must be one-dimensional")
    if np.any(qs < 0.0) or np.any(qs > 1.0):
        raise ValueError("size fraction q must lie in [0, 1]")
    g = qs.shape[0]
    if spec.kind is ChannelKind.BSC:
        flip = spec.param * qs
        out = np.empty((g, 2, 2))
        out[:, 0, 0] = 1.0 - flip
        out[:, 0, 1] = flip
        out[:, 1, 0] = flip
        out[:, 1, 1] = 1.0 - flip
        return out
    if spec.kind is ChannelKind.BEC:
        erase = spec.param * qs
        out = np.zeros((g, 2, 3))
        out[:, 0, 0] = 1.0 - erase
        out[:, 1, 1] = 1.0 - erase
        out[:, 0, 2] = erase
        out[:, 1, 2] = erase
        return out
    if spec.kind is ChannelKind.Z:
        flip = spec.param * qs
        out = np.empty((g, 2, 2))
        out[:, 0, 0] = 1.0
        out[:, 0, 1] = 0.0
        out[:, 1, 0] = flip
        out[:, 1, 1] = 1.0 - flip
        return out
    base = np.asarray(spec.matrix, dtype=np.float64)
    return np.broadcast_to(base, (g,) + base.shape).copy()


def transition_matrix(spec: ChannelSpec, q: float) -> np.ndarray:
    """The 2 x K transition matrix at one size fraction."""
    return transition_matrices(spec, np.array([q]))[0]


def transition_prob(spec: ChannelSpec, q: float, x: int, y) -> float:
    """P(y | x) at size fraction q. Raises for symbols outside the alphabet."""
    if x not in (0, 1):
        raise ValueError(f"channel input must be a bit, got {x!r}")
    j = spec.symbol_index(y)
    return float(transition_matrix(spec, q)[x, j])


def sample_output_indices(spec: ChannelSpec, qs, xs, rng: np.random.Generator) -> np.ndarray:
    """Sample one output per (q, x) pair; returns alphabet indices.

    Consumes exactly len(qs) uniforms, one per symbol in order, each
    inverted against the cumulative transition row in alphabet order.
    """
    qs = np.asarray(qs, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.int64)
    if qs.shape != xs.shape or qs.ndim != 1:
        raise ValueError("qs and xs must be equal-length 1-d arrays")
    rows = transition_matrices(spec, qs)[np.arange(qs.shape[0]), xs]
    cum = np.cumsum(rows, axis=1)
    cum[:, -1] = 1.0  # guard rounding so every uniform lands in a cell
    u = rng.random(qs.shape[0])
    # index = first k with u < cum[k] = count of k' < K-1 with u >= cum[k']
    return (u[:, None] >= cum[:, :-1]).sum(axis=1)


def sample_output(spec: ChannelSpec, q: float, x: int, rng: np.random.Generator):
    """Sample one output symbol; consumes exactly one uniform draw."""
    if x not in (0, 1):
        raise ValueError(f"channel input must be a bit, got {x!r}")
    idx = sample_output_indices(spec, np.array([q]), np.array([x]), rng)[0]
    return spec.alphabet[int(idx)]


def continuity_constant(spec: ChannelSpec, q: float) -> float:
    """Smallest c with ||log(P^{q'}/P^q)||_inf <= c*|q'-q| for |q'-q| <= min(q,1-q)/2.

    Every transition entry is affine in the size fraction, so the per-entry
    supremum over the certified range is attained at the range edge on the
    shrinking side and is computed in closed form. Endpoints q in {0, 1}
    report math.inf (the log-ratios diverge); the constant is 0 for the
    FIXED kind.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"size fraction q must lie in [0, 1], got {q!r}")
    if spec.kind is ChannelKind.FIXED:
        return 0.0
    if q == 0.0 or q == 1.0:
        return math.inf
    xi = min(q, 1.0 - q) / 2.0
    base = transition_matrix(spec, q)
    slope = (transition_matrix(spec, q + xi) - transition_matrix(spec, q - xi)) / (2.0 * xi)
    best = 0.0
    for x in range(2):
        for j in range(base.shape[1]):
            e = base[x, j]
            b = abs(slope[x, j])
            if e <= 0.0 or b == 0.0:
                continue  # structural zeros and constant entries contribute nothing
            shrink = b / e * xi
            if shrink >= 1.0:
                return math.inf  # entry vanishes inside the certified range
            best = max(best, -math.log1p(-shrink) / xi)
    return best
