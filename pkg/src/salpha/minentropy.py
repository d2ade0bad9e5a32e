"""Guessing-probability and min-entropy bounds from S_alpha.

The guessing bound for |alpha| < 1 is stitched from the Tsirelson-type
bound on beta <A1> + S_alpha: a square-root piece for large |s| and its
tangent line down to s = 2. The stitch point used here is unrelated to the
tangent anchor of the von Neumann bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .entropy import quantum_bound
from .errors import DomainError


@dataclass(frozen=True)
class MinEntropyParams:
    """Weights of I = beta <A1> + S_alpha."""

    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise DomainError("alpha and beta must be finite")


@dataclass(frozen=True)
class GuessingStitch:
    """Where the guessing bound switches to its tangent line, for 0 < |alpha| < 1.

    ``s_stitch`` = 1 + alpha^2 + sqrt(1 - alpha^4),
    ``beta_stitch`` = (2 / alpha^2)(1 - sqrt(1 - alpha^4)).
    """

    s_stitch: float
    beta_stitch: float

    @classmethod
    def for_alpha(cls, alpha: float) -> "GuessingStitch":
        a2 = alpha * alpha
        if not 0.0 < a2 < 1.0:
            raise DomainError(f"stitch point needs 0 < |alpha| < 1, got {alpha}")
        root = math.sqrt(1.0 - a2 * a2)
        # 1 - sqrt(1 - a^4) = a^4 / (1 + sqrt(1 - a^4)), stable for small alpha
        return cls(1.0 + a2 + root, 2.0 * a2 / (1.0 + root))


def _sqrt_piece(alpha: float, s: float) -> float:
    return 0.5 + 0.5 * math.sqrt(max(1.0 + alpha * alpha - s * s / 4.0, 0.0))


def guessing_probability_bound(alpha: float, s: float) -> float:
    """Upper bound on Eve's probability of guessing A1 given |S_alpha| = s."""
    a, s = abs(alpha), abs(s)
    if not 2.0 - 1e-12 <= s <= quantum_bound(a) + 1e-12:
        raise DomainError(f"|s|={s} outside [2, {quantum_bound(a)}]")
    if a >= 1.0 or a == 0.0:
        return min(1.0, _sqrt_piece(a, s))
    st = GuessingStitch.for_alpha(a)
    if s >= st.s_stitch:
        return _sqrt_piece(a, s)
    return 1.0 - (s / 2.0 - 1.0) / st.beta_stitch


def min_entropy_bound(alpha: float, s: float) -> float:
    """-log2 of the guessing-probability bound."""
    return -math.log2(guessing_probability_bound(alpha, s))


def tsirelson_i_alpha_beta(alpha: float, beta: float) -> float:
    """Largest quantum value of beta <A1> + S_alpha."""
    p = MinEntropyParams(alpha, beta)
    a, b = abs(p.alpha), abs(p.beta)
    smooth = 2.0 * math.sqrt((1.0 + a * a) * (1.0 + b * b / 4.0))
    if a >= 1.0:
        return smooth if b <= 2.0 / a else b + 2.0 * a
    if a == 0.0:
        return b + 2.0
    return smooth if b <= GuessingStitch.for_alpha(a).beta_stitch else b + 2.0
