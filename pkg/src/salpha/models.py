"""Channel models and the Devetak-Winter key rate.

Three imperfection models are supported:

* ``Depolarizing``: the maximally entangled state mixed with white noise,
  parametrized by the error rate ``delta`` (visibility ``1 - 2 delta``).
* ``LossMaxEntangled``: maximally entangled state, symmetric detection
  efficiency ``eta``; non-detections are binned to an outcome.
* ``LossPartialEntangled``: cos(theta/2)|00> + sin(theta/2)|11>, optionally
  attenuated with white noise, all non-detections binned to +1.

The key is generated from Alice's A1 = Z and Bob's B3 = Z. Alice's
non-detections are merged into her +1 outcome; Bob's stay a third column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import entr

from .entropy import BoundEvaluation, BoundParams, binary_entropy, entropy_bound
from .errors import DomainError

LN2 = math.log(2.0)


@dataclass(frozen=True)
class JointDistribution:
    """P(a, b) for Alice rows (+, -) and Bob columns (+, -[, no-click])."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2:
            raise DomainError("joint distribution must be a 2-D table")
        if np.any(p < -1e-15):
            raise DomainError("negative probability in joint distribution")
        if abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"joint distribution sums to {p.sum()}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def bob_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    @property
    def alice_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)


@dataclass(frozen=True)
class Depolarizing:
    delta: float
    bob_optimal: bool = False

    def __post_init__(self):
        if not 0.0 <= self.delta <= 0.5:
            raise DomainError(f"error rate must lie in [0, 1/2], got {self.delta}")


@dataclass(frozen=True)
class LossMaxEntangled:
    eta: float
    bob_optimal: bool = False
    visibility: float = 1.0

    def __post_init__(self):
        _check_eta(self.eta)
        _check_visibility(self.visibility)


@dataclass(frozen=True)
class LossPartialEntangled:
    eta: float
    theta: float
    phi_a: float
    visibility: float = 1.0

    def __post_init__(self):
        _check_eta(self.eta)
        _check_visibility(self.visibility)
        if not 0.0 <= self.theta <= math.pi / 2 + 1e-12:
            raise DomainError(f"theta must lie in [0, pi/2], got {self.theta}")


ChannelModel = Union[Depolarizing, LossMaxEntangled, LossPartialEntangled]


def _check_eta(eta: float) -> None:
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"detection efficiency must lie in [0, 1], got {eta}")


def _check_visibility(v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class RateResult:
    rate: float
    s_alpha: float
    h_a_given_b: float
    entropy_bound: BoundEvaluation


def preprocess_flip(d: JointDistribution, q: float) -> JointDistribution:
    """Swap Alice's two rows with probability q."""
    if d.probs.shape[0] != 2:
        raise DomainError(f"noise preprocessing needs 2 Alice rows, got {d.probs.shape[0]}")
    p = d.probs
    return JointDistribution((1.0 - q) * p + q * p[::-1])


def _cond_entropy_rows(plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
    """H(A|B) from the two Alice rows; the last axis indexes Bob's outcome."""
    col = plus + minus
    return (entr(plus).sum(-1) + entr(minus).sum(-1) - entr(col).sum(-1)) / LN2


def conditional_shannon(d: JointDistribution) -> float:
    """H(A|B) = H(AB) - H(B) in bits."""
    p = d.probs
    return float((entr(p).sum() - entr(p.sum(axis=0)).sum()) / LN2)


def depolarizing_s_alpha(delta, alpha: float, bob_optimal: bool = False):
    """S_alpha for the white-noise model with the CHSH-optimal or the S_alpha-optimal Bob."""
    v = 1.0 - 2.0 * np.asarray(delta, dtype=float)
    if bob_optimal:
        return 2.0 * math.sqrt(1.0 + alpha * alpha) * v
    return math.sqrt(2.0) * (1.0 + alpha) * v


def depolarizing_distribution(delta: float) -> JointDistribution:
    return JointDistribution([[(1 - delta) / 2, delta / 2], [delta / 2, (1 - delta) / 2]])


def depolarizing_rate(delta: float, q: float, alpha: float, bob_optimal: bool = False) -> RateResult:
    return devetak_winter(Depolarizing(delta, bob_optimal), q, alpha)


def loss_maxent_s_alpha(eta, alpha: float, bob_optimal: bool = False, visibility: float = 1.0):
    """Best S_alpha over binning strategies for the lossy maximally entangled state.

    Both-undetected rounds are deterministic and reach the classical bound;
    single-detection rounds average to zero.
    """
    eta = np.asarray(eta, dtype=float)
    quantum = 2.0 * math.sqrt(1.0 + alpha * alpha) if bob_optimal else math.sqrt(2.0) * (1.0 + alpha)
    return visibility * quantum * eta**2 + 2.0 * max(1.0, abs(alpha)) * (1.0 - eta) ** 2


def _lossy_key_rows(eta, p_pp, p_pm, p_mp, p_mm):
    """Rows (+, -) of the key table after losses, Alice's no-click merged into +."""
    nb = 1.0 - eta
    pa_p, pa_m = p_pp + p_pm, p_mp + p_mm
    pb_p, pb_m = p_pp + p_mp, p_pm + p_mm
    plus = np.stack(
        [eta**2 * p_pp + eta * nb * pb_p, eta**2 * p_pm + eta * nb * pb_m, eta * nb * pa_p + nb**2],
        axis=-1,
    )
    minus = np.stack([eta**2 * p_mp, eta**2 * p_mm, eta * nb * pa_m], axis=-1)
    return plus, minus


def _partial_key_probs(theta, visibility: float):
    """Z (x) Z outcome probabilities of v psi_theta + (1 - v) 1/4."""
    c2 = np.cos(np.asarray(theta, dtype=float) / 2.0) ** 2
    s2 = 1.0 - c2
    noise = (1.0 - visibility) / 4.0
    zero = np.zeros_like(c2)
    return visibility * c2 + noise, zero + noise, zero + noise, visibility * s2 + noise


def loss_maxent_distribution(eta: float, visibility: float = 1.0) -> JointDistribution:
    """Key table for the lossy maximally entangled state (2 x 3 after binning)."""
    return loss_partial_distribution(eta, math.pi / 2, visibility)


def loss_partial_distribution(eta: float, theta: float, visibility: float = 1.0) -> JointDistribution:
    plus, minus = _lossy_key_rows(eta, *_partial_key_probs(theta, visibility))
    return JointDistribution(np.stack([plus, minus]))


def loss_partial_s_alpha(eta, theta, phi_a, alpha: float, visibility: float = 1.0):
    """S_alpha for the partially entangled state with A1 = Z, A2 at angle phi_a
    in the Z-X plane, Bob's two measurements optimized and all no-clicks
    binned to +1.

    White noise scales every non-constant correlator by the visibility; only
    the both-undetected term 2 (1-eta)^2 alpha is unaffected.
    """
    eta = np.asarray(eta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    phi_a = np.asarray(phi_a, dtype=float)
    nb = 1.0 - eta
    cos_t = np.cos(theta)
    r = eta * np.sin(phi_a) * np.sin(theta)
    p = alpha * eta + alpha * nb * cos_t
    q = eta * np.cos(phi_a) + nb * cos_t
    correlated = eta * np.hypot(r, p + q) + eta * np.hypot(r, p - q) + 2.0 * eta * nb * alpha * cos_t
    return visibility * correlated + 2.0 * nb**2 * alpha


def chsh_small_theta_approx(eta: float, phi_a: float, theta: float) -> float:
    """Second-order expansion of the CHSH value (alpha = 1) in small theta."""
    nb = 1.0 - eta
    k = 1.0 - math.cos(phi_a)
    coeff = eta * (3.0 * eta - 2.0 - eta * nb * k / (2.0 - eta * k))
    return 2.0 + coeff * theta * theta


def chsh_small_angles_coeff(eta: float, phi_a: float) -> float:
    """theta^2 coefficient of the CHSH value when phi_a is also small."""
    return eta * (3.0 * eta - 2.0 - 0.25 * eta * (1.0 - eta) * phi_a * phi_a)


def s_alpha(model: ChannelModel, alpha: float) -> float:
    """Expected S_alpha for a channel model."""
    if isinstance(model, Depolarizing):
        return float(depolarizing_s_alpha(model.delta, alpha, model.bob_optimal))
    if isinstance(model, LossMaxEntangled):
        return float(loss_maxent_s_alpha(model.eta, alpha, model.bob_optimal, model.visibility))
    if isinstance(model, LossPartialEntangled):
        return float(
            loss_partial_s_alpha(model.eta, model.theta, model.phi_a, alpha, model.visibility)
        )
    raise TypeError(f"unknown channel model {model!r}")


def key_distribution(model: ChannelModel) -> JointDistribution:
    """P(ab|13) before noise preprocessing."""
    if isinstance(model, Depolarizing):
        return depolarizing_distribution(model.delta)
    if isinstance(model, LossMaxEntangled):
        return loss_maxent_distribution(model.eta, model.visibility)
    if isinstance(model, LossPartialEntangled):
        return loss_partial_distribution(model.eta, model.theta, model.visibility)
    raise TypeError(f"unknown channel model {model!r}")


def devetak_winter(model: ChannelModel, q: float, alpha: float) -> RateResult:
    """Lower bound ḡ_{q,alpha}(S_alpha) - H(A1|B3) on the asymptotic key rate."""
    s = s_alpha(model, alpha)
    bound = entropy_bound(BoundParams(q, alpha), s)
    h_ab = conditional_shannon(preprocess_flip(key_distribution(model), q))
    return RateResult(bound.value - h_ab, s, h_ab, bound)


def flipped_error_rate(delta: float, q: float) -> float:
    """Error rate after Alice flips her bit with probability q."""
    return q + (1.0 - 2.0 * q) * delta


def depolarizing_h_ab(delta, q: float):
    """Vectorized H(A1|B3) = h(delta_q) for the white-noise model."""
    return binary_entropy(flipped_error_rate(np.asarray(delta, dtype=float), q))
