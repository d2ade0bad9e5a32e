"""End-to-end acceptance checks; each test reports one PASS/FAIL summary line."""

import math
import time

import numpy as np
import pytest

from salpha import maxq, models, oracle
from salpha.entropy import (
    BoundParams,
    bb84_bound,
    best_alpha_bound,
    bound_value,
    branch_point,
    classical_bound,
    find_s_star,
    phi,
    quantum_bound,
    qubit_correlator_bound,
)
from salpha.minentropy import GuessingStitch, guessing_probability_bound, tsirelson_i_alpha_beta
from salpha.oracle import AttackState
from salpha.reproduce import table_entries, threshold_row


def _check_table(table):
    rows = [threshold_row(e) for e in table_entries(table)]
    for r in rows:
        print(f"table {table} {r['row']:>12} {r['column']:>7}: computed {r['computed']:.5f} "
              f"reference {r['reference']:.4f} diff {r['abs_diff']:.5f}")
    bad = [r for r in rows if r["abs_diff"] > r["tolerance"]]
    assert not bad, bad
    return rows


def test_threshold_table_depolarizing(acceptance):
    with acceptance.criterion(1, "depolarizing thresholds within 0.005 pp, under 2 min"):
        start = time.perf_counter()
        _check_table(1)
        assert time.perf_counter() - start < 120.0


def test_threshold_table_lossy_maximally_entangled(acceptance):
    with acceptance.criterion(2, "lossy maximally entangled thresholds within 0.005 pp"):
        _check_table(2)


def test_threshold_table_lossy_partially_entangled(acceptance):
    with acceptance.criterion(3, "lossy partially entangled thresholds within 0.01 pp, limit root to 1e-8"):
        rows = _check_table(3)
        root = 100.0 * (math.sqrt(10.0 / 3.0) - 1.0)
        for r in rows:
            if r["column"] == "q->1/2":
                assert abs(r["computed"] - root) <= 1e-8 * root, r


def test_threshold_table_lossy_with_noise(acceptance):
    with acceptance.criterion(4, "lossy partially entangled thresholds at v=0.99 within 0.01 pp"):
        _check_table(4)


def test_tangent_anchor_and_branch_point(acceptance):
    with acceptance.criterion(5, "tangent anchor and qubit branch point at alpha=0.9"):
        assert abs(find_s_star(BoundParams(0.0, 0.9)) - 2.4634) <= 1e-3
        assert abs(branch_point(0.9) - 2 * math.sqrt(1 + 0.81 - 0.9**4)) < 1e-14
        assert abs(branch_point(0.9) - 2.1484) <= 1e-4


def test_optimal_alpha_for_symmetric_correlations(acceptance):
    with acceptance.criterion(6, "optimal alpha 0.84 at S=2.7 and -> 1 at both ends"):
        a_mid, _ = best_alpha_bound(0.0, 1.35, 1.35)
        assert abs(a_mid - 0.84) <= 0.01
        a_lo, _ = best_alpha_bound(0.0, 1.0005, 1.0005)
        a_hi, _ = best_alpha_bound(0.0, math.sqrt(2) - 5e-4, math.sqrt(2) - 5e-4)
        print(f"optimal alpha: {a_lo:.5f} at S=2.001, {a_mid:.5f} at S=2.7, {a_hi:.5f} at S=2.827")
        assert abs(a_lo - 1.0) < 0.01 and abs(a_hi - 1.0) < 0.01
        assert abs(a_lo - 1.0) < abs(a_mid - 1.0) > abs(a_hi - 1.0)


def test_oracle_equivalence(acceptance):
    with acceptance.criterion(7, "brute-force correlator oracle vs closed form on 200 cases, under 10 min"):
        start = time.perf_counter()
        rng = np.random.default_rng(20240611)
        devs = []
        for _ in range(200):
            a = float(rng.uniform(0.3, 1.5))
            s = float(rng.uniform(2.0, quantum_bound(a)))
            devs.append(oracle.oracle_min_correlator(a, s) - float(qubit_correlator_bound(a, s)))
        devs = np.array(devs)
        print(f"oracle deviation: max {devs.max():.3e}, min {devs.min():.3e}")
        assert np.all(np.abs(devs) <= 2e-3)
        assert np.all(devs >= -1e-6)
        assert time.perf_counter() - start < 600.0


def test_spectral_tightness(acceptance):
    with acceptance.criterion(8, "BB84 attack entropy and two-state spectral entropy match closed forms"):
        worst = 0.0
        for q in np.linspace(0.0, 0.5, 10):
            for zz in np.linspace(-1.0, 1.0, 10):
                for xx in np.linspace(0.0, 1.0, 10):
                    worst = max(worst, abs(oracle.bb84_attack_entropy(q, AttackState(zz, xx)) - bb84_bound(q, xx)))
        assert worst <= 1e-8
        worst = 0.0
        for q in np.linspace(0.0, 0.5, 50):
            for f in np.linspace(0.0, 1.0, 50):
                worst = max(worst, abs(oracle.attack_entropy_spectral(q, f) - oracle.attack_entropy_closed_form(q, f)))
        assert worst <= 1e-10


def _attack_curves(big_q, x):
    inc = 1 + phi(np.sqrt(big_q + (1 - big_q) * x)) - phi(np.sqrt(x))
    dec = 1 + phi(np.sqrt(big_q + (1 - big_q) * (1 - x * x))) - phi(np.sqrt(1 - x * x))
    return inc, dec


def test_property_suites(acceptance):
    with acceptance.criterion(9, "evenness, anchors, convexity, attack-curve shape, monotonicity, continuity, eps^2 expansion"):
        rng = np.random.default_rng(11)
        for _ in range(40):
            q, alpha = rng.uniform(0, 0.5), rng.uniform(0.05, 2.5)
            p = BoundParams(q, alpha)
            lo = classical_bound(alpha)
            s = np.sort(rng.uniform(2.0, quantum_bound(alpha), (200, 3)), axis=1)
            f = [bound_value(p, s[:, k]) for k in range(3)]
            assert np.array_equal(f[0], bound_value(p, -s[:, 0]))
            assert abs(bound_value(p, lo) - bound_value(p, 2.0 if alpha <= 1 else lo)) < 1e-12
            assert abs(bound_value(p, quantum_bound(alpha)) - 1.0) < 1e-10
            lam = (s[:, 2] - s[:, 1]) / np.where(s[:, 2] > s[:, 0], s[:, 2] - s[:, 0], 1.0)
            assert np.all(f[1] <= lam * f[0] + (1 - lam) * f[2] + 1e-9)
        x = np.linspace(0.01, 0.99, 99)
        for big_q in np.linspace(0.0, 1.0, 11):
            inc, dec = _attack_curves(big_q, x)
            assert np.all(np.diff(inc) >= -1e-7) and np.all(np.diff(inc, 2) >= -1e-7)
            assert np.all(np.diff(dec) <= 1e-7) and np.all(np.diff(dec, 2) <= 1e-7)
        for q in (0.0, 0.2, 0.5):
            assert np.all(np.diff(bb84_bound(q, np.linspace(0, 1, 201))) >= -1e-12)
        for alpha in (0.3, 0.6, 0.9):
            st = GuessingStitch.for_alpha(alpha)
            line = 1 - (st.s_stitch / 2 - 1) / st.beta_stitch
            root = 0.5 + 0.5 * math.sqrt(1 + alpha**2 - st.s_stitch**2 / 4)
            assert abs(line - root) <= 1e-10
            assert abs(guessing_probability_bound(alpha, st.s_stitch) - root) <= 1e-10
            b = st.beta_stitch
            assert abs(2 * math.sqrt((1 + alpha**2) * (1 + b * b / 4)) - (b + 2)) <= 1e-10
            assert abs(tsirelson_i_alpha_beta(alpha, b * (1 - 1e-12)) - tsirelson_i_alpha_beta(alpha, b * (1 + 1e-12))) <= 1e-10
        eps = 1e-3
        q_half = (1 - eps) / 2
        for model, alpha in ((models.Depolarizing(0.08), 1.0), (models.LossMaxEntangled(0.91, True), 0.95),
                             (models.LossPartialEntangled(0.86, 0.5, 0.3), 1.0)):
            finite = models.devetak_winter(model, q_half, alpha).rate / eps**2
            coeff = maxq.maxq_rate_coeff(model, alpha).coefficient
            assert abs(finite - coeff) <= 0.01 * abs(coeff), (finite, coeff)


def test_chsh_special_case(acceptance):
    with acceptance.criterion(10, "CHSH closed form over 1000 points to 1e-12"):
        s = np.linspace(2.0, 2.0 * math.sqrt(2.0), 1000)
        ref = 1.0 - phi(np.sqrt(np.clip(s * s / 4.0 - 1.0, 0.0, 1.0)))
        assert np.max(np.abs(bound_value(BoundParams(0.0, 1.0), s) - ref)) <= 1e-12
