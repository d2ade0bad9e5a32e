"""Independent numerical checks on the analytic entropy and correlator bounds.

Three kinds of oracle live here:

* the feasible region of Z/X Pauli correlations of a two-qubit state and a
  brute-force minimization of the X-side correlation under an S_alpha
  constraint;
* explicit entropy evaluation of the attack with two pure Eve states of a
  given overlap;
* explicit entropy evaluation of the Bell-diagonal attack on the BB84 bound,
  with a four-dimensional Eve.

Eigenvalues use a closed form for 2x2 matrices and cyclic Jacobi rotations
for 4x4 ones, so nothing here shares code with the analytic formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .entropy import phi, quantum_bound
from .errors import DomainError, NumericalError

FEASIBILITY_SLACK = 1e-9


@dataclass(frozen=True)
class CorrelationMatrix:
    """<A B> for A, B in {Z, X}: rows are Alice's operator, columns Bob's."""

    e_zz: float
    e_zx: float
    e_xz: float
    e_xx: float

    def __post_init__(self):
        for name in ("e_zz", "e_zx", "e_xz", "e_xx"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [-1, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([[self.e_zz, self.e_zx], [self.e_xz, self.e_xx]])


def feasibility_check(m: CorrelationMatrix) -> bool:
    """True if I - E E^T is positive semidefinite, up to 1e-9 slack."""
    z2 = m.e_zz**2 + m.e_zx**2
    x2 = m.e_xz**2 + m.e_xx**2
    cross = m.e_zz * m.e_xz + m.e_zx * m.e_xx
    return bool(
        z2 <= 1.0 + FEASIBILITY_SLACK
        and x2 <= 1.0 + FEASIBILITY_SLACK
        and (1.0 - z2) * (1.0 - x2) >= cross * cross - FEASIBILITY_SLACK
    )


@dataclass(frozen=True)
class OracleSearchPoint:
    """Polar parametrization of a correlation matrix."""

    lam: float
    mu: float
    z_angle: float
    x_angle: float

    def correlations(self) -> CorrelationMatrix:
        return CorrelationMatrix(
            self.lam * math.cos(self.z_angle),
            self.lam * math.sin(self.z_angle),
            self.mu * math.cos(self.x_angle),
            self.mu * math.sin(self.x_angle),
        )


def _min_mu(alpha: float, s: float, lam, z, x):
    """Smallest |mu| meeting the S_alpha and determinant constraints; inf if none."""
    lam, z, x = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lam, z, x)))
    lam2 = lam * lam
    need = s * s / 4.0 - lam2 * (alpha * alpha * np.cos(z) ** 2 + np.sin(z) ** 2)
    sx2 = np.sin(x) ** 2
    c2 = np.cos(z - x) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        lower = np.where(need <= 0.0, 0.0, np.where(sx2 > 0.0, need / sx2, np.inf))
        # the determinant side only tightens as mu grows, so test it at the lower limit
        det = (1.0 - lam2) * (1.0 - lower) - lam2 * lower * c2
    ok = (lam2 <= 1.0) & (lower <= 1.0 + FEASIBILITY_SLACK) & (det >= -FEASIBILITY_SLACK)
    return np.where(ok, np.sqrt(np.minimum(lower, 1.0)), np.inf)


def _polish(alpha: float, s: float, point: np.ndarray, mu0: float):
    """Constrained local solve in (lam, mu, z, x) from a grid point.

    The minimum sits on the determinant boundary, which grid moves only
    approach to within their step. The result is kept only if it passes the
    feasibility and S_alpha checks.
    """
    target = s * s / 4.0

    def s_gap(v):
        lam, mu, z, x = v
        return lam * lam * (alpha * alpha * math.cos(z) ** 2 + math.sin(z) ** 2) + (mu * math.sin(x)) ** 2 - target

    def det(v):
        lam, mu, z, x = v
        return (1.0 - lam * lam) * (1.0 - mu * mu) - (lam * mu * math.cos(z - x)) ** 2

    res = minimize(
        lambda v: v[1] * v[1],
        np.array([point[0], mu0, point[1], point[2]]),
        method="SLSQP",
        bounds=[(0.0, 1.0), (0.0, 1.0), (0.0, math.pi), (0.0, math.pi)],
        constraints=[{"type": "ineq", "fun": s_gap}, {"type": "ineq", "fun": det}],
        options={"ftol": 1e-14, "maxiter": 200},
    )
    lam, mu, z, x = (float(v) for v in res.x)
    if s_gap(res.x) < -1e-10 or not 0.0 <= mu <= 1.0:
        return None
    cand = OracleSearchPoint(lam, mu, z, x)
    try:
        if not feasibility_check(cand.correlations()):
            return None
    except DomainError:
        return None
    return mu, np.array([lam, z, x])


def oracle_search(alpha: float, s: float, grid_n: int = 120, refine_iters: int = 3) -> tuple[float, OracleSearchPoint]:
    """Brute-force minimum of sqrt(E_xz^2 + E_xx^2) and the point attaining it."""
    s = abs(s)
    if grid_n < 40:
        raise DomainError("grid_n must be at least 40")
    if not 2.0 - 1e-12 <= s <= quantum_bound(alpha) + 1e-12:
        raise DomainError(f"s={s} outside [2, {quantum_bound(alpha)}]")
    lam_g = np.linspace(0.0, 1.0, grid_n)
    # pi/2 is where the extreme points of the region sit
    ang = np.union1d(np.linspace(0.0, math.pi, grid_n), [math.pi / 2])
    lam, z, x = np.meshgrid(lam_g, ang, ang, indexing="ij")
    mu = _min_mu(alpha, s, lam, z, x)
    k = int(np.argmin(mu))
    if not np.isfinite(mu.flat[k]):
        raise NumericalError(f"no feasible grid point for alpha={alpha}, s={s}")
    point = np.array([lam.flat[k], z.flat[k], x.flat[k]])
    best = float(mu.flat[k])
    steps = np.array([lam_g[1] - lam_g[0], math.pi / (grid_n - 1), math.pi / (grid_n - 1)])
    upper = np.array([1.0, math.pi, math.pi])
    for _ in range(refine_iters):
        for _sweep in range(4):
            for c in range(3):
                trial = np.repeat(point[None, :], 81, axis=0)
                trial[:, c] = np.clip(point[c] + np.linspace(-steps[c], steps[c], 81), 0.0, upper[c])
                vals = _min_mu(alpha, s, trial[:, 0], trial[:, 1], trial[:, 2])
                j = int(np.argmin(vals))
                if vals[j] < best:
                    best, point = float(vals[j]), trial[j]
        steps *= 0.2
    # (z, x) -> (pi - z, pi - x) leaves the problem unchanged; polish from both images
    for start in (point, np.array([point[0], math.pi - point[1], math.pi - point[2]])):
        polished = _polish(alpha, s, start, best)
        if polished is not None and polished[0] < best:
            best, point = polished
    return best, OracleSearchPoint(float(point[0]), best, float(point[1]), float(point[2]))


def oracle_min_correlator(alpha: float, s: float, grid_n: int = 120, refine_iters: int = 3) -> float:
    """Brute-force counterpart of the qubit correlator bound."""
    return oracle_search(alpha, s, grid_n, refine_iters)[0]


def optimal_attack_point(alpha: float, s: float) -> OracleSearchPoint:
    """Constraint-saturating correlations for |alpha| < 1 below the branch point.

    Uses the stationary point t = 1 of the mu^2 lower bound; only valid while
    the implied lambda^2 lies in [0, 1].
    """
    a = abs(alpha)
    if not 0.0 < a < 1.0:
        raise DomainError("the interior optimum exists only for 0 < |alpha| < 1")
    x_ = (1.0 - a * a) * (s * s / 4.0 - 1.0)
    if x_ <= 0.0:
        raise DomainError("needs |s| > 2")
    big_lambda = (a * math.sqrt(x_) - x_) / (a * a)
    lam2 = s * s / 4.0 - big_lambda
    if not 0.0 <= lam2 <= 1.0:
        raise DomainError(f"t = 1 is not attainable for alpha={alpha}, s={s}")
    mu2 = 2.0 * math.sqrt(x_) / a - x_ / (a * a)
    lam, mu = math.sqrt(lam2), math.sqrt(mu2)
    cos2d = (1.0 - lam2) * (1.0 - mu2) / (lam2 * mu2) if lam2 * mu2 > 0 else 1.0
    delta = math.acos(math.sqrt(min(max(cos2d, 0.0), 1.0)))
    pa = (1.0 - a * a) * lam2 + mu2
    pb = (1.0 - a * a) * lam2 - mu2
    sigma = math.atan2(pb * math.sin(delta), -pa * math.cos(delta))
    return OracleSearchPoint(lam, mu, 0.5 * (sigma + delta), 0.5 * (sigma - delta))


def s_constraint_value(alpha: float, m: CorrelationMatrix) -> float:
    """alpha^2 E_zz^2 + E_zx^2 + E_xx^2, the bound on S_alpha^2 / 4."""
    return alpha * alpha * m.e_zz**2 + m.e_zx**2 + m.e_xx**2


# ---------------------------------------------------------------------------
# spectral entropy evaluation


def eigvals_2x2(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a 2x2 Hermitian matrix."""
    a, d = float(np.real(m[0, 0])), float(np.real(m[1, 1]))
    b = abs(m[0, 1])
    mean = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), b)
    return np.array([mean - rad, mean + rad])


def eigvals_jacobi(m: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(m, dtype=float)
    if np.max(np.abs(a - a.T)) > 1e-12:
        raise DomainError("Jacobi routine needs a real symmetric matrix")
    n = a.shape[0]
    scale = max(np.max(np.abs(a)), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= tol * scale:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for r in range(p + 1, n):
                if a[p, r] == 0.0:
                    continue
                theta = (a[r, r] - a[p, p]) / (2.0 * a[p, r])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                rot = np.eye(n)
                rot[p, p] = rot[r, r] = c
                rot[p, r], rot[r, p] = sn, -sn
                a = rot.T @ a @ rot
    raise NumericalError("Jacobi iteration did not converge")


def _entropy_of(eigs: np.ndarray) -> float:
    e = eigs[eigs > 1e-300]
    return float(-np.sum(e * np.log2(e)))


def _spectrum(m: np.ndarray) -> np.ndarray:
    return eigvals_2x2(m) if m.shape == (2, 2) else eigvals_jacobi(m)


def cq_conditional_entropy(rho0: np.ndarray, rho1: np.ndarray, q: float) -> float:
    """H(A|E) of the classical-quantum state after Alice flips her bit with prob. q.

    ``rho0``, ``rho1`` are Eve's subnormalized states for Alice's outcomes.
    """
    block0 = (1.0 - q) * rho0 + q * rho1
    block1 = q * rho0 + (1.0 - q) * rho1
    s_ae = _entropy_of(np.clip(_spectrum(block0), 0.0, None)) + _entropy_of(np.clip(_spectrum(block1), 0.0, None))
    return s_ae - _entropy_of(np.clip(_spectrum(rho0 + rho1), 0.0, None))


def _check_q_f(q: float, f: float) -> None:
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"overlap must lie in [0, 1], got {f}")


def attack_entropy_closed_form(q: float, f: float) -> float:
    """H(A|E) for the two-state attack with Eve overlap f."""
    _check_q_f(q, f)
    return float(1.0 + phi(math.sqrt((1 - 2 * q) ** 2 + 4 * q * (1 - q) * f * f)) - phi(f))


def attack_entropy_spectral(q: float, f: float) -> float:
    """Same quantity from the eigenvalues of the explicit 2x2 Eve blocks."""
    _check_q_f(q, f)
    psi0 = np.array([1.0, 0.0])
    psi1 = np.array([f, math.sqrt(max(1.0 - f * f, 0.0))])
    return cq_conditional_entropy(np.outer(psi0, psi0) / 2.0, np.outer(psi1, psi1) / 2.0, q)


@dataclass(frozen=True)
class AttackState:
    """Bell-diagonal attack with given <Z Z> and <X X>; overlap_f = e_xx when e_zz = 1."""

    e_zz: float
    e_xx: float

    def __post_init__(self):
        if not (-1.0 <= self.e_zz <= 1.0 and -1.0 <= self.e_xx <= 1.0):
            raise DomainError("correlations must lie in [-1, 1]")

    @property
    def overlap_f(self) -> float:
        return self.e_xx

    def bell_weights(self) -> np.ndarray:
        """Weights of phi+, phi-, psi+, psi-."""
        zz, xx = self.e_zz, self.e_xx
        return np.array([(1 + zz) * (1 + xx), (1 + zz) * (1 - xx), (1 - zz) * (1 + xx), (1 - zz) * (1 - xx)]) / 4.0

    def pure_state(self) -> np.ndarray:
        """|Psi>_ABE as an array indexed [a, b, e]; Eve's basis labels the Bell states."""
        r2 = 1.0 / math.sqrt(2.0)
        bell = np.zeros((4, 2, 2))
        bell[0, 0, 0], bell[0, 1, 1] = r2, r2
        bell[1, 0, 0], bell[1, 1, 1] = r2, -r2
        bell[2, 0, 1], bell[2, 1, 0] = r2, r2
        bell[3, 0, 1], bell[3, 1, 0] = r2, -r2
        amps = np.sqrt(np.clip(self.bell_weights(), 0.0, None))
        return np.einsum("k,kab->abk", amps, bell)

    def eve_states(self) -> tuple[np.ndarray, np.ndarray]:
        """Eve's subnormalized states given Alice's Z outcome 0 or 1."""
        psi = self.pure_state()
        return tuple(np.einsum("be,bf->ef", psi[a], psi[a].conj()) for a in (0, 1))

    def reduced_ab(self) -> np.ndarray:
        psi = self.pure_state().reshape(4, 4)
        return psi @ psi.conj().T


def bb84_attack_entropy(q: float, st: AttackState) -> float:
    """H(Z|E) of the Bell-diagonal attack after a q-flip, by 4x4 eigen-decomposition."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    rho0, rho1 = st.eve_states()
    return cq_conditional_entropy(rho0, rho1, q)


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_expansion_ab(e_zz: float, e_xx: float) -> np.ndarray:
    """(I I + E_xx X X - E_xx E_zz Y Y + E_zz Z Z) / 4."""
    kron = lambda p: np.kron(_PAULI[p], _PAULI[p])
    return (kron("I") + e_xx * kron("X") - e_xx * e_zz * kron("Y") + e_zz * kron("Z")) / 4.0
