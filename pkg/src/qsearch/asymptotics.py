"""Closed-form second-order predictions and related inversions.

Conventions, all in nats:

- joint_resolution / separate_resolution return the PER-DIMENSION
  -log(resolution), i.e. (1/d)(nC + sqrt(nV) Phi^{-1}(eps)) and its
  split-budget analogue.
- mi_resolution returns the TOTAL -d log(resolution) for a
  measurement-independent channel, because its closed forms are stated in
  that normalization.
- The unresolved O(log n) remainder is never silently added: each formula
  returns its leading part, and `window` exposes the bracket
  [-(1/2) log n, +log n] (scaled consistently with the value returned) so
  callers can surface it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .capacity import capacity, dispersion
from .channels import ChannelSpec, fixed

_LN2 = math.log(2.0)

# rational-approximation constants for the standard normal quantile
# (AS241 algorithm PPND16, central and two tail branches)
_A = (3.3871328727963666080, 133.14166789178437745, 1971.5909503065514427,
      13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
      33430.575583588128105, 2509.0809287301226727)
_B = (42.313330701600911252, 687.18700749205790830, 5394.1960214247511077,
      21213.794301586595867, 39307.895800092710610, 28729.085735721942674,
      5226.4952788528545610)
_C = (1.42343711074968357734, 4.63033784615654529590, 5.76949722146069140550,
      3.64784832476320460504, 1.27045825245236838258, 0.241780725177450611770,
      0.0227238449892691845833, 7.74545014278341407640e-4)
_D = (2.05319162663775882187, 1.67638483018380384940, 0.689767334985100004550,
      0.148103976427480074590, 0.0151986665636164571966, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720, 5.46378491116411436990, 1.78482653991729133580,
      0.296560571828504891230, 0.0265321895265761230930, 0.00124266094738807843860,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (0.599832206555887937690, 0.136929880922735805310, 0.0148753612908506148525,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def gaussian_cdf(x: float) -> float:
    """Standard normal CDF via erfc; accurate in both tails."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _ppnd16(p: float) -> float:
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = ((((((_A[7] * r + _A[6]) * r + _A[5]) * r + _A[4]) * r + _A[3]) * r + _A[2]) * r + _A[1]) * r + _A[0]
        den = ((((((_B[6] * r + _B[5]) * r + _B[4]) * r + _B[3]) * r + _B[2]) * r + _B[1]) * r + _B[0]) * r + 1.0
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = ((((((_C[7] * r + _C[6]) * r + _C[5]) * r + _C[4]) * r + _C[3]) * r + _C[2]) * r + _C[1]) * r + _C[0]
        den = ((((((_D[6] * r + _D[5]) * r + _D[4]) * r + _D[3]) * r + _D[2]) * r + _D[1]) * r + _D[0]) * r + 1.0
    else:
        r -= 5.0
        num = ((((((_E[7] * r + _E[6]) * r + _E[5]) * r + _E[4]) * r + _E[3]) * r + _E[2]) * r + _E[1]) * r + _E[0]
        den = ((((((_F[6] * r + _F[5]) * r + _F[4]) * r + _F[3]) * r + _F[2]) * r + _F[1]) * r + _F[0]) * r + 1.0
    val = num / den
    return -val if q < 0.0 else val


def gaussian_quantile(eps: float) -> float:
    """Standard normal quantile, absolute error below 1e-12.

    Arguments above 1/2 are reflected to the lower tail (the subtraction
    1 - eps is exact there), so the Newton polish always runs against the
    erfc-based CDF where it carries full relative precision; the step is
    skipped in the far tail where the density underflows.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"quantile argument must lie in (0, 1), got {eps!r}")
    if eps > 0.5:
        return -gaussian_quantile(1.0 - eps)
    x = _ppnd16(eps)
    pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if pdf > 1e-300:
        x -= (gaussian_cdf(x) - eps) / pdf
    return x


class ResolutionMode(Enum):
    JOINT = "joint"
    SEPARATE = "separate"
    ADAPTIVE_LB = "adaptive_lb"
    MI = "mi"
    GAIN_LB = "gain_lb"


class LogWindow(Enum):
    NONE = "none"
    MINUS_HALF_LOG = "minusHalfLog"
    PLUS_LOG = "plusLog"


@dataclass(frozen=True)
class SecondOrderQuery:
    """Inputs to the second-order formulas."""

    n: int
    d: int
    eps: float
    mode: ResolutionMode = ResolutionMode.JOINT
    include_log_term: LogWindow = LogWindow.NONE

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"query count must be at least 1, got {self.n!r}")
        if self.d < 1:
            raise ValueError(f"dimension must be at least 1, got {self.d!r}")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"target error must lie in [0, 1), got {self.eps!r}")


def _apply_window(base: float, window: LogWindow, low: float, high: float) -> float:
    if window is LogWindow.MINUS_HALF_LOG:
        return base + low
    if window is LogWindow.PLUS_LOG:
        return base + high
    return base


def joint_window(n: int, d: int) -> tuple[float, float]:
    """Remainder bracket for the per-dimension joint formula."""
    return (-0.5 * math.log(n) / d, math.log(n) / d)


def separate_window(n: int, d: int) -> tuple[float, float]:
    """Remainder bracket for the per-dimension split-budget formula."""
    return (-0.5 * math.log(n / d), math.log(n / d))


def mi_window(n: int) -> tuple[float, float]:
    """Remainder bracket for the total measurement-independent formula."""
    return (-0.5 * math.log(n), math.log(n))


def joint_resolution(spec: ChannelSpec, query: SecondOrderQuery) -> float:
    """Per-dimension -log(resolution): (1/d)(nC + sqrt(nV_eps) Phi^{-1}(eps))."""
    if query.mode is not ResolutionMode.JOINT:
        raise ValueError(f"expected joint mode, got {query.mode!r}")
    c = capacity(spec).capacity
    v = dispersion(spec, query.eps)
    base = (query.n * c + math.sqrt(query.n * v) * gaussian_quantile(query.eps)) / query.d
    low, high = joint_window(query.n, query.d)
    return _apply_window(base, query.include_log_term, low, high)


def separate_resolution(spec: ChannelSpec, query: SecondOrderQuery) -> float:
    """Per-dimension -log(resolution) when each dimension gets n/d queries
    and error budget eps/d: nC/d + sqrt(nV_{eps/d}/d) Phi^{-1}(eps/d)."""
    if query.mode is not ResolutionMode.SEPARATE:
        raise ValueError(f"expected separate mode, got {query.mode!r}")
    c = capacity(spec).capacity
    eps_dim = query.eps / query.d
    v = dispersion(spec, eps_dim)
    base = query.n * c / query.d + math.sqrt(query.n * v / query.d) * gaussian_quantile(eps_dim)
    low, high = separate_window(query.n, query.d)
    return _apply_window(base, query.include_log_term, low, high)


def adaptive_resolution_lb(spec: ChannelSpec, query: SecondOrderQuery, l: float) -> float:
    """Leading term of the adaptive lower bound: lC / (d(1-eps)).

    `l` is the mean query budget; eps may be 0 here (unlike the fixed-length
    formulas). The O(log l) remainder is unspecified and not surfaced.
    """
    if query.mode is not ResolutionMode.ADAPTIVE_LB:
        raise ValueError(f"expected adaptive_lb mode, got {query.mode!r}")
    if not 0.0 <= query.eps < 1.0:
        raise ValueError(f"adaptive error budget must lie in [0, 1), got {query.eps!r}")
    if l <= 0.0:
        raise ValueError(f"mean query budget must be positive, got {l!r}")
    c = capacity(spec).capacity
    return l * c / (query.d * (1.0 - query.eps))


def adaptivity_gain_lb(spec: ChannelSpec, n: int, d: int, eps: float) -> float:
    """Lower bound on the adaptive-over-non-adaptive gain in -log(resolution)."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"target error must lie in (0, 1), got {eps!r}")
    c = capacity(spec).capacity
    v = dispersion(spec, eps)
    return (n * c * eps / (1.0 - eps) - math.sqrt(n * v) * gaussian_quantile(eps)) / d


class MiFlavor(Enum):
    BSC = "bsc"
    BEC = "bec"
    Z = "z"
    GENERIC = "generic"


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


def z_mi_constants(zeta: float) -> tuple[float, float, float]:
    """(q*, C, V) for the fixed one-sided-flip channel with flip prob zeta.

    The optimizer and capacity are closed forms; the dispersion is the
    exact density variance evaluated at the optimizer (not a transcribed
    formula), which a test cross-checks against generic numerical
    optimization.
    """
    if zeta >= 1.0:
        return 0.0, 0.0, 0.0
    g = _binary_entropy(zeta) / (1.0 - zeta)
    zexp = math.exp(g)
    q_star = 1.0 / ((1.0 - zeta) * (1.0 + zexp))
    c = math.log1p(1.0 / zexp)
    # exact variance of the density at q*: three positive-probability cells
    py1 = q_star * (1.0 - zeta)
    py0 = 1.0 - py1
    cells = (
        ((1.0 - q_star) * 1.0, math.log(1.0 / py0)),
        ((q_star * zeta, math.log(zeta / py0)) if zeta > 0.0 else (0.0, 0.0)),
        (q_star * (1.0 - zeta), math.log((1.0 - zeta) / py1)),
    )
    mean = sum(w * v for w, v in cells if w > 0.0)
    var = sum(w * (v - mean) ** 2 for w, v in cells if w > 0.0)
    return q_star, c, var


def mi_resolution(n: int, d: int, eps: float, flavor: MiFlavor,
                  param: float | None = None, spec: ChannelSpec | None = None) -> float:
    """Total -d log(resolution) for a measurement-independent channel.

    Closed forms for the three parametric flavors; GENERIC numerically
    optimizes the input fraction for a fixed-matrix spec. The O(log n)
    remainder is excluded.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"target error must lie in (0, 1), got {eps!r}")
    if n < 1 or d < 1:
        raise ValueError("n and d must be at least 1")
    quant = gaussian_quantile(eps)
    if flavor is MiFlavor.GENERIC:
        if spec is None:
            raise ValueError("generic flavor requires a fixed-matrix channel spec")
        report = capacity(spec)
        v = dispersion(spec, eps)
        return n * report.capacity + math.sqrt(n * v) * quant
    if param is None or not 0.0 <= param <= 1.0:
        raise ValueError(f"flavor parameter must lie in [0, 1], got {param!r}")
    if flavor is MiFlavor.BSC:
        nu = param
        base = n * (_LN2 - _binary_entropy(nu))
        if 0.0 < nu < 1.0:
            base += math.sqrt(n * nu * (1.0 - nu)) * math.log((1.0 - nu) / nu) * quant
        return base
    if flavor is MiFlavor.BEC:
        tau = param
        return n * (1.0 - tau) * _LN2 + math.sqrt(n * tau * (1.0 - tau)) * _LN2 * quant
    _, c, v = z_mi_constants(param)
    return n * c + math.sqrt(n * v) * quant


def z_mi_fixed_spec(zeta: float) -> ChannelSpec:
    """Fixed-matrix spec for the one-sided-flip channel (generic-mode oracle)."""
    return fixed([[1.0, 0.0], [zeta, 1.0 - zeta]], alphabet=(0, 1))


def phase_transition_rate(spec: ChannelSpec, d: int) -> float:
    """Critical per-query decay rate of the resolution: C/d (nats per query)."""
    if d < 1:
        raise ValueError(f"dimension must be at least 1, got {d!r}")
    return capacity(spec).capacity / d


def invert_queries(spec: ChannelSpec, d: int, delta: float, eps: float) -> int:
    """Smallest n whose joint second-order value reaches -log(delta).

    Comparisons carry a 1e-9 slack so exact algebraic coincidences (for
    example the noiseless case) are not lost to float rounding. The formula
    can dip before rising for small n; the scan accounts for that.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"target resolution must lie in (0, 1), got {delta!r}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"target error must lie in (0, 1), got {eps!r}")
    c = capacity(spec).capacity
    if c <= 0.0:
        raise ValueError("channel has zero capacity; no finite query count suffices")
    v = dispersion(spec, eps)
    target = -math.log(delta)
    tol = 1e-9

    def value(n: int) -> float:
        return (n * c + math.sqrt(n * v) * gaussian_quantile(eps)) / d

    if value(1) >= target - tol:
        return 1
    # root of C u^2 + b u - d*target in u = sqrt(n)
    b = math.sqrt(v) * gaussian_quantile(eps)
    u = (-b + math.sqrt(b * b + 4.0 * c * d * target)) / (2.0 * c)
    n = max(1, int(u * u) - 3)
    while value(n) < target - tol:
        n += 1
    while n > 1 and value(n - 1) >= target - tol:
        n -= 1
    return n
