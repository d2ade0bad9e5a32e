"""Closed-form conditional entropy bounds for the asymmetric CHSH family.

The Bell expression is

    S_alpha = alpha <A1 B1> + alpha <A1 B2> + <A2 B1> - <A2 B2>

and Alice flips her key bit with probability ``q`` before error correction.
Everything here is a pure function of its arguments; the functions that take
``s`` accept floats or numpy arrays unless stated otherwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import entr, xlog1py

from .errors import DomainError, NumericalError
from .search import alpha_grid, bisect_root, grid_golden_max

LN2 = math.log(2.0)
_SLACK = 1e-9


def _check_range(x, lo: float, hi: float, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < lo - _SLACK) or np.any(arr > hi + _SLACK):
        raise DomainError(f"{name} outside [{lo}, {hi}]: {x}")
    return np.clip(arr, lo, hi)


def _out(arr: np.ndarray):
    return float(arr) if arr.ndim == 0 else arr


def phi(x):
    """phi(x) = 1 - (1+x)/2 log2(1+x) - (1-x)/2 log2(1-x), i.e. h(1/2 + x/2)."""
    x = _check_range(np.abs(x) if np.ndim(x) else abs(x), 0.0, 1.0, "phi argument")
    return _out(1.0 - (xlog1py(1.0 + x, x) + xlog1py(1.0 - x, -x)) / (2.0 * LN2))


def binary_entropy(p):
    """Binary Shannon entropy in bits, with h(0) = h(1) = 0."""
    p = _check_range(p, 0.0, 1.0, "probability")
    return _out((entr(p) + entr(1.0 - p)) / LN2)


def _atanh_ratio(x: np.ndarray) -> np.ndarray:
    """atanh(x)/x on [0, 1], continuous at 0 and +inf at 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x < 1.0, np.arctanh(np.minimum(x, 1.0 - 1e-300)) / x, np.inf)
    small = x < 1e-4
    return np.where(small, 1.0 + x * x / 3.0 + x**4 / 5.0, out)


class Branch(str, enum.Enum):
    ANALYTIC = "analytic"
    TANGENT = "tangent"


@dataclass(frozen=True)
class BoundParams:
    """Noise-preprocessing flip rate ``q`` and asymmetry weight ``alpha``.

    ``q`` above 1/2 is folded to ``1 - q``; the bound only depends on
    ``q (1 - q)``.
    """

    q: float
    alpha: float

    def __post_init__(self):
        if not (-_SLACK <= self.q <= 1.0 + _SLACK) or math.isnan(self.q):
            raise DomainError(f"q must lie in [0, 1], got {self.q}")
        if not math.isfinite(self.alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha}")
        q = min(max(self.q, 0.0), 1.0)
        object.__setattr__(self, "q", min(q, 1.0 - q))

    @property
    def abs_alpha(self) -> float:
        return abs(self.alpha)

    @property
    def noise_weight(self) -> float:
        """(1 - 2q)^2, the weight of the noiseless part under the square root."""
        return (1.0 - 2.0 * self.q) ** 2


def classical_bound(alpha: float) -> float:
    """Local (classical) maximum C_alpha of S_alpha."""
    return 2.0 * max(1.0, abs(alpha))


def quantum_bound(alpha: float) -> float:
    """Tsirelson-type maximum Q_alpha = 2 sqrt(1 + alpha^2)."""
    return 2.0 * math.sqrt(1.0 + alpha * alpha)


def _overlap_sq(alpha: float, s) -> np.ndarray:
    u = np.asarray(s, dtype=float) ** 2 / 4.0 - alpha * alpha
    if np.any(u < -_SLACK):
        raise DomainError(f"s^2/4 < alpha^2 for alpha={alpha}, s={s}")
    if np.any(u > 1.0 + _SLACK):
        raise DomainError(f"s beyond the quantum bound for alpha={alpha}, s={s}")
    return np.clip(u, 0.0, 1.0)


def g(params: BoundParams, s):
    """Entropy of the explicit overlap attack as a function of S_alpha.

    g(s) = 1 + phi(sqrt((1-2q)^2 + 4q(1-q) u)) - phi(sqrt(u)),
    with u = s^2/4 - alpha^2.
    """
    u = _overlap_sq(params.alpha, s)
    w = params.noise_weight
    return _out(1.0 + np.asarray(phi(np.sqrt(w + (1.0 - w) * u))) - np.asarray(phi(np.sqrt(u))))


def g_prime(params: BoundParams, s):
    """Analytic derivative dg/ds.

    Uses d/du phi(sqrt(u)) = -atanh(sqrt(u)) / (2 sqrt(u) ln 2), which stays
    finite at u = 0. At the quantum bound the slope is +inf (0 when q = 1/2).
    """
    s = np.asarray(s, dtype=float)
    u = _overlap_sq(params.alpha, s)
    w = params.noise_weight
    e = np.sqrt(u)
    a = np.sqrt(w + (1.0 - w) * u)
    noisy = (1.0 - w) * _atanh_ratio(a) if w < 1.0 else 0.0
    with np.errstate(invalid="ignore"):
        inner = _atanh_ratio(e) - noisy
    at_top = e >= 1.0
    inner = np.where(at_top, np.inf if w > 0.0 else 0.0, inner)
    return _out(np.abs(s) / (4.0 * LN2) * inner)


def branch_point(alpha: float) -> float:
    """2 sqrt(1 + alpha^2 - alpha^4): where the two qubit correlator branches meet."""
    a2 = alpha * alpha
    return 2.0 * math.sqrt(1.0 + a2 - a2 * a2)


def tangent_anchor(
    f: Callable[[float], float],
    fprime: Callable[[float], float],
    y0: float,
    lo: float,
    hi: float,
    xtol: float = 1e-12,
) -> tuple[float, bool]:
    """Find s in [lo, hi] where the tangent of ``f`` at s passes through (2, y0).

    Solves y0 + f'(s)(s - 2) - f(s) = 0 by bisection. Returns ``(s, flat)``;
    ``flat`` is True when the residual is already nonnegative at ``lo`` (a
    degenerate, constant curve) and ``lo`` is returned. If the residual is
    still negative at ``hi`` the root is closer to ``hi`` than double
    precision resolves (the slope diverges only logarithmically) and ``hi``
    is returned.
    """

    def residual(x: float) -> float:
        return y0 + fprime(x) * (x - 2.0) - f(x)

    r_lo = residual(lo)
    if r_lo >= -1e-15:
        return lo, True
    if residual(hi) <= 0.0:
        return hi, False
    root, _ = bisect_root(residual, lo, hi, xtol=xtol)
    return root, False


@lru_cache(maxsize=65536)
def _s_star(q: float, abs_alpha: float) -> tuple[float, bool]:
    params = BoundParams(q, abs_alpha)
    lo, hi = branch_point(abs_alpha), quantum_bound(abs_alpha)
    return tangent_anchor(
        lambda x: float(g(params, x)),
        lambda x: float(g_prime(params, x)),
        float(binary_entropy(params.q)),
        lo,
        hi,
    )


def find_s_star(params: BoundParams) -> float:
    """Tangent anchor s* for |alpha| < 1.

    s* lies in [2 sqrt(1+a^2-a^4), 2 sqrt(1+a^2)] and is the point where the
    tangent of g passes through (2, h(q)). At q = 1/2 the curve is flat and
    the lower end of the bracket is returned.
    """
    a = params.abs_alpha
    if not 0.0 < a < 1.0:
        raise DomainError(f"tangent anchor needs 0 < |alpha| < 1, got {params.alpha}")
    s_star, flat = _s_star(params.q, a)
    if flat and params.q < 0.5 - 1e-6:
        raise NumericalError(f"tangent residual does not change sign for {params}")
    return s_star


def tangent_slope(params: BoundParams, s_star: float) -> float:
    """Slope of the linear piece of ḡ: the chord from (2, h(q)) to (s*, g(s*)).

    Equal to g'(s*) at the exact root, but stays finite when s* sits at the
    quantum bound.
    """
    hq = float(binary_entropy(params.q))
    return (float(g(params, s_star)) - hq) / (s_star - 2.0)


@dataclass(frozen=True)
class BoundEvaluation:
    value: float
    branch: Branch
    s_star: float | None = None


def bound_value(params: BoundParams, s):
    """Vectorized device-independent bound ḡ_{q,alpha}(s), values only.

    Below the classical bound the result is h(q).
    """
    shape = np.shape(s)
    s = np.abs(np.atleast_1d(np.asarray(s, dtype=float)))
    a = params.abs_alpha
    top = quantum_bound(a)
    if np.any(s > top + _SLACK):
        raise DomainError(f"|s| exceeds the quantum bound {top} for alpha={params.alpha}")
    s = np.minimum(s, top)
    hq = float(binary_entropy(params.q))
    vals = np.full(s.shape, hq)
    if a >= 1.0 or a == 0.0:
        analytic = s > classical_bound(a)
    else:
        s_star = find_s_star(params)
        slope = tangent_slope(params, s_star)
        linear = (s >= 2.0) & (s < s_star)
        vals[linear] = hq + slope * (s[linear] - 2.0)
        analytic = s >= s_star
    if np.any(analytic):
        vals[analytic] = g(params, s[analytic])
    return _out(vals.reshape(shape))


def entropy_bound(params: BoundParams, s: float) -> BoundEvaluation:
    """Tight lower bound on H(A1|E) given S_alpha = s (scalar)."""
    s = abs(float(s))
    a = params.abs_alpha
    if s > quantum_bound(a) + _SLACK:
        raise DomainError(f"|s|={s} exceeds the quantum bound for alpha={params.alpha}")
    value = float(bound_value(params, s))
    if a >= 1.0 or a == 0.0:
        branch = Branch.ANALYTIC if s > classical_bound(a) else Branch.TANGENT
        return BoundEvaluation(value, branch)
    s_star = find_s_star(params)
    branch = Branch.ANALYTIC if s >= s_star else Branch.TANGENT
    return BoundEvaluation(value, branch, s_star)


def qubit_correlator_bound(alpha: float, s):
    """Smallest |<X (x) B>| compatible with S_alpha = s for qubit strategies.

    Uses sqrt(s^2/4 - alpha^2) when |alpha| >= 1 or |s| is above the branch
    point, and the concave branch below it for |alpha| < 1.
    """
    a = abs(alpha)
    s = np.abs(np.asarray(s, dtype=float))
    if np.any(s < 2.0 - _SLACK):
        raise DomainError(f"|s| below the classical value 2: {s}")
    if np.any(s > quantum_bound(a) + _SLACK):
        raise DomainError(f"|s| above the quantum bound for alpha={alpha}")
    u = np.clip(s * s / 4.0 - a * a, 0.0, 1.0)
    upper = np.sqrt(u)
    if a >= 1.0:
        return _out(upper)
    inner = 1.0 - np.sqrt(np.maximum((1.0 - a * a) * (s * s / 4.0 - 1.0), 0.0)) / a
    lower = np.sqrt(np.clip(1.0 - inner * inner, 0.0, 1.0))
    return _out(np.where(s >= branch_point(a), upper, lower))


def bb84_bound(q: float, exx):
    """BB84 entropy bound with preprocessing as a function of |<X (x) B>|."""
    exx = _check_range(np.abs(exx), 0.0, 1.0, "|<X B>|")
    q = float(_check_range(q, 0.0, 1.0, "q"))
    w = (1.0 - 2.0 * q) ** 2
    return _out(1.0 + np.asarray(phi(np.sqrt(w + (1.0 - w) * exx * exx))) - np.asarray(phi(exx)))


def best_alpha_bound(
    q: float, c1: float, c2: float, lo: float = 1e-3, hi: float = 3.0, points: int = 64
) -> tuple[float, float]:
    """Maximize ḡ_{q,alpha}(alpha*c1 + c2) over alpha.

    ``c1 = <A1B1> + <A1B2>`` and ``c2 = <A2B1> - <A2B2>``. Returns
    ``(alpha_opt, value)``; ``(1.0, h(q))`` when no alpha certifies anything
    beyond the preprocessing noise.
    """
    hq = float(binary_entropy(min(q, 1.0 - q)))

    def value(alpha: float) -> float:
        s = alpha * c1 + c2
        top = quantum_bound(alpha)
        if abs(s) > top + _SLACK:
            return -np.inf
        return float(bound_value(BoundParams(q, alpha), min(abs(s), top)))

    alpha_opt, best = grid_golden_max(value, alpha_grid(lo, hi, points), tol=1e-9)
    if best <= hq + 1e-15:
        return 1.0, hq
    return alpha_opt, best
