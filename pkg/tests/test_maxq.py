import math

import numpy as np
import pytest

from salpha import maxq, models
from salpha.entropy import BoundParams, binary_entropy, bound_value, quantum_bound
from salpha.errors import DomainError
from salpha.models import Depolarizing, LossMaxEntangled, LossPartialEntangled, conditional_shannon, preprocess_flip

EPS = 1e-3
Q_NEAR_HALF = (1 - EPS) / 2


def test_noise_deficit_matches_binary_entropy():
    np.testing.assert_allclose((1 - binary_entropy(Q_NEAR_HALF)) / EPS**2, maxq.NOISE_DEFICIT, rtol=1e-5)


def test_entropy_deficit_is_finite_at_zero_overlap():
    assert maxq.entropy_eps2_coeff(1.0, 2.0) == pytest.approx(-1 / (2 * math.log(2)), rel=1e-12)
    np.testing.assert_allclose(maxq.entropy_deficit(1.0, 2.0 + 1e-9), maxq.NOISE_DEFICIT, rtol=1e-6)


def test_entropy_deficit_vanishes_at_quantum_bound():
    assert maxq.entropy_deficit(1.0, 2 * math.sqrt(2)) == pytest.approx(0.0, abs=1e-15)
    assert maxq.entropy_deficit(0.7, quantum_bound(0.7)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("alpha,s", [(1.0, 2.4), (1.0, 2.7), (0.9, 2.3), (0.9, 2.6), (1.3, 3.0), (0.5, 2.2)])
def test_entropy_coefficient_matches_finite_eps(alpha, s):
    finite = (bound_value(BoundParams(Q_NEAR_HALF, alpha), s) - 1.0) / EPS**2
    np.testing.assert_allclose(finite, maxq.entropy_eps2_coeff(alpha, s), rtol=0.01)


@pytest.mark.parametrize(
    "model",
    [Depolarizing(0.07), LossMaxEntangled(0.92), LossPartialEntangled(0.88, 0.6, 0.4), LossPartialEntangled(0.9, 0.3, 0.2, 0.98)],
)
def test_shannon_coefficient_matches_finite_eps(model):
    d = models.key_distribution(model)
    finite = (1.0 - conditional_shannon(preprocess_flip(d, Q_NEAR_HALF))) / EPS**2
    np.testing.assert_allclose(finite, maxq.shannon_eps2_coeff(d), rtol=0.01)


@pytest.mark.parametrize(
    "model,alpha",
    [(Depolarizing(0.08), 1.0), (LossMaxEntangled(0.91, True), 0.95), (LossPartialEntangled(0.85, 0.5, 0.3), 1.0)],
)
def test_rate_coefficient_matches_finite_eps(model, alpha):
    finite = models.devetak_winter(model, Q_NEAR_HALF, alpha).rate / EPS**2
    coeff = maxq.maxq_rate_coeff(model, alpha).coefficient
    np.testing.assert_allclose(finite, coeff, rtol=0.01, atol=1e-4)


@pytest.mark.parametrize("eta,theta,v", [(0.9, 0.7, 1.0), (0.8, 1.2, 1.0), (0.95, 0.2, 0.96)])
def test_binned_sum_closed_form(eta, theta, v):
    d = models.loss_partial_distribution(eta, theta, v)
    mean = v * math.cos(theta)
    np.testing.assert_allclose(maxq.loss_binned_sum(eta, mean, mean, v * 1.0) / (2 * math.log(2)), maxq.shannon_eps2_coeff(d), rtol=1e-12)


@pytest.mark.parametrize("eta,phi_a", [(0.83, 0.05), (0.9, 0.02), (0.8, 0.1)])
def test_small_angle_coefficient_matches_exact_limit(eta, phi_a):
    # theta -> 0 first at fixed phi_a; the limits do not commute at phi_a = 0
    theta = 1e-5
    exact = maxq.maxq_rate_coeff(LossPartialEntangled(eta, theta, phi_a), 1.0).coefficient / theta**2
    np.testing.assert_allclose(exact, maxq.small_angle_rate_coeff(eta, phi_a), rtol=1e-3)


def test_small_angle_threshold_root():
    eta = maxq.small_angle_threshold()
    np.testing.assert_allclose(eta, math.sqrt(10 / 3) - 1, rtol=1e-15)
    assert maxq.small_angle_rate_coeff(eta) == pytest.approx(0.0, abs=1e-14)
    assert maxq.small_angle_rate_coeff(eta + 1e-3) > 0 > maxq.small_angle_rate_coeff(eta - 1e-3)


def test_limit_anchor_tangency():
    a = 0.9
    s = maxq.limit_s_star(a)
    d = maxq.entropy_deficit(a, np.array([s - 1e-6, s, s + 1e-6]))
    chord = (d[1] - maxq.NOISE_DEFICIT) / (s - 2)
    np.testing.assert_allclose((d[2] - d[0]) / 2e-6, chord, rtol=1e-4)


def test_limit_deficit_nonincreasing_and_convex_upper_envelope():
    for a in (0.6, 0.9, 1.0, 1.4):
        s = np.linspace(2.0 if a <= 1 else 2 * a, quantum_bound(a), 400)
        d = maxq.entropy_deficit(a, s)
        assert np.all(np.diff(d) <= 1e-12)
        # the entropy coefficient -D is convex in s
        assert np.all(np.diff(-d, 2) >= -1e-9)


def test_limit_anchor_domain():
    with pytest.raises(DomainError):
        maxq.limit_s_star(1.0)
    with pytest.raises(DomainError):
        maxq.entropy_deficit(1.0, 3.0)
