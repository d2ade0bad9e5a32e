import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from salpha import oracle
from salpha.entropy import bb84_bound, branch_point, qubit_correlator_bound, quantum_bound
from salpha.errors import DomainError
from salpha.oracle import AttackState, CorrelationMatrix, OracleSearchPoint


def test_feasibility_examples():
    assert oracle.feasibility_check(CorrelationMatrix(1, 0, 0, 1))
    assert oracle.feasibility_check(CorrelationMatrix(0.7, 0.7, -0.7, 0.7))
    assert not oracle.feasibility_check(CorrelationMatrix(0.9, 0.9, 0, 0))
    with pytest.raises(DomainError):
        CorrelationMatrix(1.2, 0, 0, 0)


def test_feasibility_matches_psd_test():
    rng = np.random.default_rng(3)
    for _ in range(500):
        e = rng.uniform(-1, 1, 4)
        m = CorrelationMatrix(*e)
        psd = np.linalg.eigvalsh(np.eye(2) - m.as_array() @ m.as_array().T).min() >= -1e-9
        assert oracle.feasibility_check(m) == psd


@pytest.mark.parametrize("alpha,s,expected", [(0.9, 2.1484, math.sqrt(1 - 0.9**4)), (1.0, 2.0, 0.0), (1.5, 3.2, math.sqrt(0.31))])
def test_oracle_examples(alpha, s, expected):
    val, point = oracle.oracle_search(alpha, s)
    assert val == pytest.approx(expected, abs=2e-3)
    m = point.correlations()
    assert oracle.feasibility_check(m)
    assert 4 * oracle.s_constraint_value(alpha, m) >= s * s - 1e-6


@pytest.mark.parametrize("alpha,s", [(0.5, 2.2), (0.9, 2.6), (1.0, 2.5), (1.3, 3.0), (2.0, 4.3)])
def test_oracle_matches_closed_form(alpha, s):
    val = oracle.oracle_min_correlator(alpha, s)
    ref = qubit_correlator_bound(alpha, s)
    assert val - ref >= -1e-6
    assert val - ref <= 2e-3


@pytest.mark.parametrize("alpha", [0.4, 0.7, 0.9])
def test_attack_point_saturates_bound(alpha):
    s = 0.5 * (2.0 + branch_point(alpha))
    pt = oracle.optimal_attack_point(alpha, s)
    m = pt.correlations()
    assert oracle.feasibility_check(m)
    np.testing.assert_allclose(4 * oracle.s_constraint_value(alpha, m), s * s, rtol=1e-10)
    np.testing.assert_allclose(pt.mu, qubit_correlator_bound(alpha, s), rtol=1e-10)


def test_attack_point_domain():
    with pytest.raises(DomainError):
        oracle.optimal_attack_point(1.0, 2.3)
    with pytest.raises(DomainError):
        oracle.optimal_attack_point(0.9, 2.6)


def test_search_point_polar_form():
    m = OracleSearchPoint(0.5, 0.8, 0.3, 1.1).correlations()
    np.testing.assert_allclose(m.as_array(), [[0.5 * math.cos(0.3), 0.5 * math.sin(0.3)], [0.8 * math.cos(1.1), 0.8 * math.sin(1.1)]])


# ---------------------------------------------------------------- spectral routes


def test_eigvals_2x2_against_closed_form():
    m = np.array([[0.3, 0.2], [0.2, 0.1]])
    np.testing.assert_allclose(oracle.eigvals_2x2(m), [0.2 - math.sqrt(0.05), 0.2 + math.sqrt(0.05)], rtol=1e-14)


def test_jacobi_against_characteristic_roots():
    # diag(1, 2, 3, 4) conjugated by a fixed rotation
    c, s = math.cos(0.4), math.sin(0.4)
    r = np.eye(4)
    r[0, 0] = r[3, 3] = c
    r[0, 3], r[3, 0] = -s, s
    r2 = np.eye(4)
    r2[1, 1] = r2[2, 2] = c
    r2[1, 2], r2[2, 1] = -s, s
    m = (r @ r2) @ np.diag([1.0, 2.0, 3.0, 4.0]) @ (r @ r2).T
    np.testing.assert_allclose(oracle.eigvals_jacobi(m), [1, 2, 3, 4], atol=1e-13)


def test_jacobi_rejects_nonsymmetric():
    with pytest.raises(DomainError):
        oracle.eigvals_jacobi(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_spectral_grid_matches_closed_form():
    for q in np.linspace(0, 0.5, 50):
        for f in np.linspace(0, 1, 50):
            np.testing.assert_allclose(oracle.attack_entropy_spectral(q, f), oracle.attack_entropy_closed_form(q, f), atol=1e-10)


def test_bb84_attack_grid():
    for q in np.linspace(0, 0.5, 10):
        for zz in np.linspace(-1, 1, 10):
            for xx in np.linspace(0, 1, 10):
                got = oracle.bb84_attack_entropy(q, AttackState(zz, xx))
                np.testing.assert_allclose(got, bb84_bound(q, xx), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_attack_state_marginal_is_pauli_expansion(zz, xx):
    st_ = AttackState(zz, xx)
    np.testing.assert_allclose(st_.reduced_ab(), oracle.pauli_expansion_ab(zz, xx), atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(st_.pure_state()), 1.0, rtol=1e-14)


def test_attack_entropy_domain():
    with pytest.raises(DomainError):
        oracle.attack_entropy_closed_form(0.2, 1.3)
    with pytest.raises(DomainError):
        oracle.bb84_attack_entropy(1.5, AttackState(1, 1))


def test_quantum_bound_reached_by_pure_correlations():
    alpha = 0.8
    val = oracle.oracle_min_correlator(alpha, quantum_bound(alpha) - 1e-9)
    assert val == pytest.approx(1.0, abs=2e-3)
