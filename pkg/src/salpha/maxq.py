"""Key rates in the limit of maximal noise preprocessing.

With q = (1 - eps)/2 both the entropy bound and H(A1|B3) approach 1 and the
key rate behaves as ``coefficient * eps**2``. Thresholds in this limit are
roots of the coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .entropy import branch_point, classical_bound, quantum_bound, tangent_anchor
from .errors import DomainError
from .models import ChannelModel, JointDistribution, key_distribution, s_alpha

LN2 = math.log(2.0)
#: eps^2 deficit of h((1 - eps)/2) from 1.
NOISE_DEFICIT = 1.0 / (2.0 * LN2)


@dataclass(frozen=True)
class EpsilonRate:
    """Key rate per eps^2; positive means a positive rate for small eps."""

    coefficient: float


def _curve_deficit(e: np.ndarray) -> np.ndarray:
    """(1 - E^2)/(4E) log2((1+E)/(1-E)), continuous at E = 0 (value 1/(2 ln 2))."""
    e = np.asarray(e, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(e < 1.0, np.arctanh(np.minimum(e, 1.0 - 1e-300)) / e, np.inf)
    ratio = np.where(e < 1e-4, 1.0 + e * e / 3.0 + e**4 / 5.0, ratio)
    ratio = np.where(e >= 1.0, 0.0, ratio)
    return (1.0 - e * e) * ratio / (2.0 * LN2)


def _curve_deficit_slope(alpha: float, s: float) -> float:
    """d/ds of the curve deficit at E = sqrt(s^2/4 - alpha^2)."""
    e = math.sqrt(max(s * s / 4.0 - alpha * alpha, 0.0))
    if e >= 1.0:
        return -math.inf
    if e < 1e-4:
        bracket_over_e = -4.0 / 3.0 - 8.0 * e * e / 15.0
    else:
        bracket_over_e = (1.0 / e - (1.0 + e * e) * math.atanh(e) / (e * e)) / e
    return s / 4.0 * bracket_over_e / (2.0 * LN2)


def _overlap(alpha: float, s) -> np.ndarray:
    return np.sqrt(np.clip(np.asarray(s, dtype=float) ** 2 / 4.0 - alpha * alpha, 0.0, 1.0))


@lru_cache(maxsize=4096)
def limit_s_star(abs_alpha: float) -> float:
    """Tangent anchor of the eps^2 deficit curve for 0 < |alpha| < 1."""
    if not 0.0 < abs_alpha < 1.0:
        raise DomainError(f"tangent anchor needs 0 < |alpha| < 1, got {abs_alpha}")
    root, _ = tangent_anchor(
        lambda s: -float(_curve_deficit(_overlap(abs_alpha, s))),
        lambda s: -_curve_deficit_slope(abs_alpha, s),
        -NOISE_DEFICIT,
        branch_point(abs_alpha),
        quantum_bound(abs_alpha),
    )
    return root


def entropy_deficit(alpha: float, s):
    """Vectorized eps^2 deficit D(s) >= 0 of the entropy bound from 1.

    Below the classical bound the bound is h(q) and D = 1/(2 ln 2); for
    |alpha| < 1 the part below the anchor is replaced by the chord to (2, D0).
    """
    a = abs(alpha)
    shape = np.shape(s)
    s = np.abs(np.atleast_1d(np.asarray(s, dtype=float)))
    if np.any(s > quantum_bound(a) + 1e-9):
        raise DomainError(f"|s| exceeds the quantum bound for alpha={alpha}")
    out = np.full(s.shape, NOISE_DEFICIT)
    if a >= 1.0 or a == 0.0:
        curve = s > classical_bound(a)
    else:
        anchor = limit_s_star(a)
        d_anchor = float(_curve_deficit(_overlap(a, anchor)))
        slope = (d_anchor - NOISE_DEFICIT) / (anchor - 2.0)
        linear = (s >= 2.0) & (s < anchor)
        out[linear] = NOISE_DEFICIT + slope * (s[linear] - 2.0)
        curve = s >= anchor
    out[curve] = _curve_deficit(_overlap(a, s[curve]))
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def entropy_eps2_coeff(alpha: float, s: float) -> float:
    """eps^2 coefficient of (entropy bound - 1); always <= 0."""
    return -float(entropy_deficit(alpha, s))


def shannon_eps2_coeff(d: JointDistribution) -> float:
    """eps^2 deficit of H(A1|B3) from 1, from the table before preprocessing.

    Columns with zero weight contribute nothing.
    """
    p = d.probs
    if p.shape[0] != 2:
        raise DomainError("need exactly two Alice rows")
    return float(_shannon_deficit_rows(p[0], p[1]))


def _shannon_deficit_rows(plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
    col = plus + minus
    diff = plus - minus
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(col > 0.0, diff * diff / np.where(col > 0.0, col, 1.0), 0.0)
    return terms.sum(axis=-1) / (2.0 * LN2)


def loss_binned_sum(eta: float, mean_a: float, mean_b: float, mean_ab: float) -> float:
    """sum_b (p'_{+b} + p'_{no-click,b} - p'_{-b})^2 / p_b for a lossy table.

    Closed form in the lossless marginals <A>, <B> and correlator <AB>.
    """
    nb = 1.0 - eta
    return (
        nb * nb
        + eta * nb * mean_a * (2.0 + eta * mean_a)
        + eta**3 / (1.0 - mean_b**2) * (mean_a**2 + mean_ab**2 - 2.0 * mean_a * mean_b * mean_ab)
    )


def maxq_rate_coeff(model: ChannelModel, alpha: float) -> EpsilonRate:
    """Rate per eps^2 as q -> 1/2: Shannon deficit minus entropy deficit."""
    shannon = shannon_eps2_coeff(key_distribution(model))
    return EpsilonRate(shannon - float(entropy_deficit(alpha, s_alpha(model, alpha))))


def small_angle_rate_coeff(eta: float, phi_a: float = 0.0) -> float:
    """Rate per (eps^2 theta^2) for the nearly separable state with CHSH, small phi_a."""
    nb = 1.0 - eta
    return eta / (6.0 * LN2) * (3.0 * eta * eta + 6.0 * eta - 7.0 - 0.5 * eta * nb * phi_a * phi_a)


def small_angle_threshold() -> float:
    """Positive root of 3 eta^2 + 6 eta - 7, i.e. sqrt(10/3) - 1."""
    return math.sqrt(10.0 / 3.0) - 1.0

