"""Hand-rolled reference implementations used to pin expected values.

Everything here is written directly from the channel family definitions
and textbook formulas, without calling into the package, so each test
compares two independently coded computations. Keep these naive and
readable; speed only matters enough to stay inside the suite's runtime
budget.
"""

import math

import numpy as np

ERASE = "e"


def family_matrix(kind: str, param: float, q: float):
    """(symbols, 2-row conditional table) for a query of size q.

    kind bsc flips with probability param*q, bec erases with probability
    param*q, z sends 1 to 0 with probability param*q.
    """
    g = param * q
    if kind == "bsc":
        return (0, 1), [[1.0 - g, g], [g, 1.0 - g]]
    if kind == "bec":
        return (0, 1, ERASE), [[1.0 - g, 0.0, g], [0.0, 1.0 - g, g]]
    if kind == "z":
        return (0, 1), [[1.0, 0.0], [g, 1.0 - g]]
    raise ValueError(kind)


def density_atoms(kind: str, param: float, q: float, p: float | None = None):
    """(value, weight) atoms of the log-ratio log(T(y|x)/P_Y(y)).

    X ~ Bernoulli(p) feeds the size-q channel; the marginal in the
    denominator uses the same p. Zero-weight cells are dropped, so every
    atom has a finite value or weight > 0 with value -inf (z channel
    mismatch cases).
    """
    if p is None:
        p = q
    symbols, t = family_matrix(kind, param, q)
    k = len(symbols)
    py = [(1.0 - p) * t[0][j] + p * t[1][j] for j in range(k)]
    atoms = []
    for x in (0, 1):
        wx = (1.0 - p, p)[x]
        for j in range(k):
            w = wx * t[x][j]
            if w == 0.0:
                continue
            val = math.log(t[x][j] / py[j]) if t[x][j] > 0.0 else -math.inf
            atoms.append((val, w))
    return atoms


def design_metric_atoms(kind: str, param: float, q: float, p: float):
    """(value, weight) atoms of the p-designed decode metric under the
    actual size-q law.

    Weights: X ~ Bernoulli(p) through the size-q channel. Values: the
    log-ratio of the size-p channel against its own Bernoulli(p) marginal,
    i.e. what a codebook designed for p scores when queries run at q.
    Coincides with density_atoms when p == q.
    """
    symbols, t_q = family_matrix(kind, param, q)
    t_p = family_matrix(kind, param, p)[1]
    k = len(symbols)
    py = [(1.0 - p) * t_p[0][j] + p * t_p[1][j] for j in range(k)]
    atoms = []
    for x in (0, 1):
        wx = (1.0 - p, p)[x]
        for j in range(k):
            w = wx * t_q[x][j]
            if w == 0.0:
                continue
            val = math.log(t_p[x][j] / py[j]) if t_p[x][j] > 0.0 else -math.inf
            atoms.append((val, w))
    return atoms


def moments(kind: str, param: float, q: float, p: float | None = None):
    """(mean, variance, third absolute central moment) of the log-ratio."""
    atoms = density_atoms(kind, param, q, p)
    mean = math.fsum(v * w for v, w in atoms)
    var = math.fsum(w * (v - mean) ** 2 for v, w in atoms)
    third = math.fsum(w * abs(v - mean) ** 3 for v, w in atoms)
    return mean, var, third


def _entropy(x: np.ndarray) -> np.ndarray:
    # binary entropy in nats, 0 ln 0 = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -np.where(x > 0.0, x * np.log(x), 0.0)
        t -= np.where(x < 1.0, (1.0 - x) * np.log1p(-x), 0.0)
    return t


def grid_capacity(kind: str, param: float, points: int = 10 ** 6):
    """(max, argmax) of the mutual information over a uniform q grid.

    Closed forms per family: bsc I = h(q + g - 2qg) - h(g); bec
    I = (1 - g) h(q); z I = h(q(1 - g)) - q h(g), all with g = param*q.
    """
    q = np.linspace(0.0, 1.0, points)
    g = param * q
    if kind == "bsc":
        mi = _entropy(q + g - 2.0 * q * g) - _entropy(g)
    elif kind == "bec":
        mi = (1.0 - g) * _entropy(q)
    elif kind == "z":
        mi = _entropy(q * (1.0 - g)) - q * _entropy(g)
    else:
        raise ValueError(kind)
    i = int(np.argmax(mi))
    return float(mi[i]), float(q[i])


def blahut_binary(matrix, iters: int = 10 ** 4, tol: float = 1e-13) -> float:
    """Alternating-maximization capacity of a fixed 2-row channel."""
    t = np.asarray(matrix, dtype=float)
    p = np.array([0.5, 0.5])
    upper = math.inf
    lower = -math.inf
    for _ in range(iters):
        py = p @ t
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(t > 0.0, np.log(t / py), 0.0)
        div = (t * ratio).sum(axis=1)
        lower = float(p @ div)
        upper = float(div.max())
        if upper - lower < tol:
            break
        w = p * np.exp(div - div.max())
        p = w / w.sum()
    return 0.5 * (lower + upper)


def gaussian_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def quantile_bisect(p: float, lo: float = -40.0, hi: float = 40.0) -> float:
    """Bisection inverse of the erfc-based normal CDF, 2^-60 wide."""
    if not 0.0 < p < 1.0:
        raise ValueError(p)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gaussian_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 2.0 ** -60:
            break
    return 0.5 * (lo + hi)


def mc_sum_cdf(kind: str, param: float, q: float, n: int, t: float,
               samples: int, seed: int, p: float | None = None) -> float:
    """Monte Carlo estimate of Pr{sum of n iid log-ratios <= t}.

    Samples category counts with a multinomial, so the cost is per
    sample, not per letter. -inf atoms land below any finite t.
    """
    atoms = density_atoms(kind, param, q, p)
    values = np.array([v for v, _ in atoms])
    weights = np.array([w for _, w in atoms])
    weights = weights / weights.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, weights, size=samples)
    finite = np.isfinite(values)
    sums = counts[:, finite] @ values[finite]
    if not finite.all():
        sums = np.where((counts[:, ~finite] > 0).any(axis=1), -np.inf, sums)
    return float((sums <= t + 1e-12).mean())


def naive_decode(bits, y_idx, table) -> int:
    """Per-row exact summation decoder; first row wins ties (1-based)."""
    best_row = 0
    best_score = -math.inf
    for r in range(len(bits)):
        score = math.fsum(table[bits[r][t]][y_idx[t]] for t in range(len(y_idx)))
        if score > best_score:
            best_row, best_score = r, score
    return best_row + 1


def wilson_direct(k: int, n: int, z: float) -> tuple[float, float]:
    """Textbook Wilson score interval, no clamping beyond [0, 1]."""
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)
