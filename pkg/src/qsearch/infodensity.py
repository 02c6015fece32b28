"""Single-letter and sequence information densities.

The single-letter density at input fraction p and size fraction q is
log(P^q(y|x) / P_Y^{p,q}(y)) in nats, where P_Y^{p,q} is the output
marginal induced by a Bern(p) input through P^q. A structural channel zero
under a reachable symbol gives -inf; float -inf is the sentinel (it orders
below every finite value and absorbs under addition, which is exactly the
semantics the decoder needs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSpec, transition_matrix

NEG_INF = float("-inf")


def output_marginal_vector(spec: ChannelSpec, p: float, q: float) -> np.ndarray:
    """Marginal output law over the alphabet under Bern(p) x P^q."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"input fraction p must lie in [0, 1], got {p!r}")
    t = transition_matrix(spec, q)
    return (1.0 - p) * t[0] + p * t[1]


def output_marginal(spec: ChannelSpec, p: float, q: float, y) -> float:
    """Marginal probability of one output symbol."""
    return float(output_marginal_vector(spec, p, q)[spec.symbol_index(y)])


@dataclass(frozen=True)
class InfoDensityTable:
    """Precomputed density values for all (x, y) cells at one (p, q).

    `values[x, j]` is the density for input x and the j-th alphabet symbol;
    -inf marks structural zeros under reachable symbols. Symbols with zero
    marginal are unreachable; their cells are set to 0.0 and carry no
    weight anywhere.
    """

    spec: ChannelSpec
    p: float
    q: float
    values: np.ndarray
    marginal: np.ndarray

    @property
    def alphabet(self) -> tuple:
        return self.spec.alphabet


def info_density_table(spec: ChannelSpec, p: float, q: float) -> InfoDensityTable:
    t = transition_matrix(spec, q)
    marg = output_marginal_vector(spec, p, q)
    values = np.zeros_like(t)
    reachable = marg > 0.0
    pos = t > 0.0
    both = pos & reachable[None, :]
    with np.errstate(divide="ignore"):
        values[both] = np.log(t[both]) - np.log(np.broadcast_to(marg, t.shape)[both])
    values[(~pos) & reachable[None, :]] = NEG_INF
    return InfoDensityTable(spec=spec, p=p, q=q, values=values, marginal=marg)


def info_density(spec: ChannelSpec, p: float, q: float, x: int, y) -> float:
    """Single-letter density in nats; -inf on structural zeros.

    Raises if the symbol has zero marginal (unreachable under Bern(p) x P^q).
    """
    if x not in (0, 1):
        raise ValueError(f"channel input must be a bit, got {x!r}")
    j = spec.symbol_index(y)
    table = info_density_table(spec, p, q)
    if table.marginal[j] <= 0.0:
        raise ValueError(f"symbol {y!r} is unreachable under p={p!r}, q={q!r}")
    return float(table.values[x, j])


def sequence_info_density(spec: ChannelSpec, p: float, xs, ys) -> float:
    """Sum of per-step densities at (p, p); the decoder's score function.

    The sum is exactly rounded (math.fsum), so it is independent of term
    order; -inf terms make the whole sum -inf. Empty sequences score 0.
    """
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} inputs vs {len(ys)} outputs")
    if len(xs) == 0:
        return 0.0
    table = info_density_table(spec, p, p)
    terms = []
    for x, y in zip(xs, ys):
        if x not in (0, 1):
            raise ValueError(f"channel input must be a bit, got {x!r}")
        j = spec.symbol_index(y)
        if table.marginal[j] <= 0.0:
            raise ValueError(f"symbol {y!r} is unreachable under p={p!r}")
        v = table.values[x, j]
        if v == NEG_INF:
            return NEG_INF
        terms.append(float(v))
    return math.fsum(terms)
