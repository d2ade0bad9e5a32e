"""Rate maximization over nuisance parameters, threshold solving and sweeps.

The optimizers are deterministic: a fixed coarse grid is the global stage,
followed by coordinate-wise golden-section refinement. Grid evaluations are
vectorized over (theta, phi_a) for each (alpha, q) pair.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
from scipy.ndimage import maximum_filter

from . import models
from .entropy import BoundParams, bound_value, entropy_bound, quantum_bound
from .errors import DomainError, NumericalError
from .maxq import _shannon_deficit_rows, entropy_deficit, small_angle_rate_coeff
from .search import alpha_grid, bisect_bracket, golden_max

FREE_PARAMETERS = ("alpha", "q", "theta", "phi_a")

BOUNDS = {
    "alpha": (1e-3, 3.0),
    "q": (0.0, 0.5),
    "theta": (1e-6, math.pi / 2),
    "phi_a": (0.0, math.pi),
}

DEFAULTS = {"alpha": 1.0, "q": 0.0, "theta": math.pi / 2, "phi_a": math.pi / 2}


def coarse_grid(name: str) -> np.ndarray:
    if name == "alpha":
        return alpha_grid(1e-3, 3.0, 64)
    if name == "q":
        return np.arange(32) * (0.5 / 32)
    if name == "theta":
        return np.arange(1, 49) * (math.pi / 2 / 48)
    if name == "phi_a":
        return np.arange(1, 49) * (math.pi / 48)
    raise KeyError(name)


@dataclass(frozen=True)
class ModelFamily:
    """A channel model with its channel parameter (delta or eta) left open.

    ``kind`` is one of ``depolarizing``, ``loss-maxent``, ``loss-partial``.
    """

    kind: str
    bob_optimal: bool = False
    visibility: float = 1.0

    def __post_init__(self):
        if self.kind not in ("depolarizing", "loss-maxent", "loss-partial"):
            raise DomainError(f"unknown model family {self.kind!r}")

    @property
    def channel_parameter(self) -> str:
        return "delta" if self.kind == "depolarizing" else "eta"

    @property
    def free_parameters(self) -> tuple[str, ...]:
        if self.kind == "loss-partial":
            return FREE_PARAMETERS
        return ("alpha", "q")

    def model(self, x: float, theta: float = DEFAULTS["theta"], phi_a: float = DEFAULTS["phi_a"]):
        if self.kind == "depolarizing":
            return models.Depolarizing(x, self.bob_optimal)
        if self.kind == "loss-maxent":
            return models.LossMaxEntangled(x, self.bob_optimal, self.visibility)
        return models.LossPartialEntangled(x, theta, phi_a, self.visibility)


def _key_rows(family: ModelFamily, x: float, theta):
    if family.kind == "depolarizing":
        return np.array([(1 - x) / 2, x / 2]), np.array([x / 2, (1 - x) / 2])
    if family.kind == "loss-maxent":
        theta = math.pi / 2
    probs = models._partial_key_probs(np.asarray(theta)[..., None], family.visibility)
    plus, minus = models._lossy_key_rows(x, *[p[..., 0] for p in probs])
    return plus, minus


def _s_values(family: ModelFamily, x: float, alpha: float, theta, phi_a):
    if family.kind == "depolarizing":
        return models.depolarizing_s_alpha(x, alpha, family.bob_optimal)
    if family.kind == "loss-maxent":
        return models.loss_maxent_s_alpha(x, alpha, family.bob_optimal, family.visibility)
    return models.loss_partial_s_alpha(x, theta, phi_a, alpha, family.visibility)


def evaluate(family: ModelFamily, x: float, alpha: float, q: float, theta=None, phi_a=None,
             maxq: bool = False, normalize: bool = False):
    """Vectorized objective over broadcast ``theta``/``phi_a`` arrays.

    Finite q: the Devetak-Winter bound. ``maxq``: the eps^2 rate coefficient;
    with ``normalize`` it is divided by theta^2, which keeps its sign and has
    a finite limit for a nearly separable state.
    """
    theta = DEFAULTS["theta"] if theta is None else theta
    phi_a = DEFAULTS["phi_a"] if phi_a is None else phi_a
    theta, phi_a = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi_a, dtype=float))
    s = np.abs(np.asarray(_s_values(family, x, alpha, theta, phi_a), dtype=float))
    s = np.broadcast_to(np.minimum(s, quantum_bound(alpha)), theta.shape)
    plus, minus = _key_rows(family, x, theta)
    if maxq:
        out = _shannon_deficit_rows(plus, minus) - entropy_deficit(alpha, s)
        if normalize:
            out = out / theta**2
    else:
        h_ab = models._cond_entropy_rows((1 - q) * plus + q * minus, q * plus + (1 - q) * minus)
        out = bound_value(BoundParams(q, alpha), s) - h_ab
    out = np.broadcast_to(out, theta.shape)
    return float(out) if out.ndim == 0 else np.array(out)


@dataclass
class Optimum:
    value: float
    params: dict
    normalized: bool = False
    from_limit: bool = False


def _limit_candidate(family: ModelFamily, x: float, optimize: frozenset, fixed: dict) -> Optimum | None:
    # theta -> 0 (and phi_a -> 0) boundary of the noiseless partially entangled state with CHSH.
    if family.kind != "loss-partial" or family.visibility != 1.0 or "theta" not in optimize:
        return None
    if "alpha" not in optimize and fixed.get("alpha", DEFAULTS["alpha"]) != 1.0:
        return None
    if "phi_a" not in optimize and fixed.get("phi_a", DEFAULTS["phi_a"]) != 0.0:
        return None
    params = {"alpha": 1.0, "q": 0.5, "theta": 0.0, "phi_a": 0.0}
    return Optimum(small_angle_rate_coeff(x, 0.0), params, normalized=True, from_limit=True)


def maximize_rate(family: ModelFamily, x: float, optimize: Iterable[str] = (), fixed: dict | None = None,
                  maxq: bool = False, tol: float = 1e-8, max_rounds: int = 40,
                  n_starts: int = 2) -> Optimum:
    """Maximize the key-rate objective at channel value ``x`` over the flagged parameters.

    Parameters not flagged take their value from ``fixed`` (or DEFAULTS).
    With ``maxq`` the objective is the eps^2 coefficient and ``q`` is not a
    free parameter. The ``n_starts`` best local maxima of the coarse grid,
    and those on the alpha = 1 slice, are each refined.
    """
    optimize = frozenset(optimize)
    fixed = dict(fixed or {})
    unknown = optimize - set(family.free_parameters)
    if unknown:
        raise DomainError(f"cannot optimize {sorted(unknown)} for {family.kind}")
    if maxq:
        optimize = optimize - {"q"}
    normalize = maxq and family.kind == "loss-partial"
    base = {k: fixed.get(k, DEFAULTS[k]) for k in FREE_PARAMETERS}
    if maxq:
        base["q"] = 0.5

    names = [n for n in FREE_PARAMETERS if n in optimize]
    grids = {n: coarse_grid(n) if n in optimize else np.array([base[n]]) for n in FREE_PARAMETERS}

    def scalar(p: dict) -> float:
        try:
            return evaluate(family, x, p["alpha"], p["q"], p["theta"], p["phi_a"], maxq, normalize)
        except DomainError:
            return -math.inf

    # local maxima of every (theta, phi_a) slice seed the refinement
    cells: list[tuple[float, dict]] = []
    kink: list[tuple[float, dict]] = []
    tt, pp = np.meshgrid(grids["theta"], grids["phi_a"], indexing="ij")
    for a in grids["alpha"]:
        for q in grids["q"]:
            try:
                vals = evaluate(family, x, a, q, tt, pp, maxq, normalize)
            except DomainError:
                continue
            vals = np.where(np.isnan(vals), -np.inf, vals)
            peaks = _slice_peaks(vals, n_starts)
            found = [(float(vals[i]), dict(base, alpha=float(a), q=float(q), theta=float(tt[i]),
                                           phi_a=float(pp[i]))) for i in peaks]
            cells.extend(found)
            if a == 1.0 and len(grids["alpha"]) > 1:
                kink.extend(found)
    cells.sort(key=lambda c: -c[0])
    kink.sort(key=lambda c: -c[0])
    starts = cells[:n_starts] + [c for c in kink[:n_starts] if c not in cells[:n_starts]]

    best_val, best = starts[0] if starts else (-math.inf, dict(base))
    if names:
        widths = {n: float(np.max(np.diff(grids[n]))) if len(grids[n]) > 1 else 0.0 for n in names}
        for start_val, start_params in starts:
            val, params = _coordinate_refine(scalar, names, start_val, start_params, widths, tol, max_rounds)
            if val > best_val:
                best_val, best = val, params

    result = Optimum(best_val, best, normalized=normalize)
    limit = _limit_candidate(family, x, optimize, fixed) if normalize else None
    if limit is not None and limit.value > result.value:
        return limit
    return result


def _slice_peaks(vals: np.ndarray, count: int) -> list[tuple[int, ...]]:
    """Indices of the ``count`` largest local maxima of a grid slice."""
    if vals.size == 1:
        return [(0,) * vals.ndim]
    is_peak = vals >= maximum_filter(vals, size=3, mode="nearest")
    idx = np.argwhere(is_peak & np.isfinite(vals))
    if len(idx) == 0:
        return [np.unravel_index(int(np.argmax(vals)), vals.shape)]
    order = np.argsort(-vals[tuple(idx.T)])[:count]
    return [tuple(int(k) for k in idx[j]) for j in order]


def _coordinate_refine(f, names, best_val, best, widths, tol, max_rounds):
    """Cyclic golden-section refinement in windows that halve every round."""
    for _ in range(max_rounds):
        start = best_val
        for n in names:
            lo_b, hi_b = BOUNDS[n]
            lo = max(lo_b, best[n] - widths[n])
            hi = min(hi_b, best[n] + widths[n])
            xn, fn = golden_max(lambda v: f(dict(best, **{n: v})), lo, hi, tol=tol)
            if fn > best_val:
                best_val, best = fn, dict(best, **{n: xn})
        # a single coordinate is settled by one golden pass
        if len(names) == 1 or best_val - start <= 1e-13:
            break
        widths = {n: max(w * 0.5, 100 * tol) for n, w in widths.items()}
    return best_val, best


@dataclass
class ThresholdResult:
    critical_value: float
    optimal_alpha: float | None = None
    optimal_q: float | None = None
    optimal_theta: float | None = None
    optimal_phi_a: float | None = None
    iterations: int = 0
    residual_rate: float = 0.0
    normalized: bool = False


DEFAULT_BRACKETS = {"delta": (0.0, 0.2), "eta": (0.7, 1.0)}


def find_threshold(family: ModelFamily, optimize: Iterable[str] = (), fixed: dict | None = None,
                   maxq: bool = False, bracket: tuple[float, float] | None = None,
                   xtol: float = 1e-6) -> ThresholdResult:
    """Channel value where the (optimized) key rate changes sign.

    Bisection to ``xtol``, with the nuisance parameters re-optimized at every
    step, then one interpolation step inside the final bracket. Reported
    parameters come from the bracket end with positive rate.
    """
    optimize = frozenset(optimize)
    lo, hi = bracket or DEFAULT_BRACKETS[family.channel_parameter]
    seen: dict[float, Optimum] = {}

    def objective(x: float) -> float:
        if x not in seen:
            seen[x] = maximize_rate(family, x, optimize, fixed, maxq)
        return seen[x].value

    try:
        a, b, fa, fb, iterations = bisect_bracket(objective, lo, hi, xtol=xtol)
    except NumericalError as exc:
        raise NumericalError(f"no threshold for {family.kind} in [{lo}, {hi}]: {exc}") from exc
    root = a if fa == fb else a - fa * (b - a) / (fb - fa)
    residual = objective(root)
    p = seen[a if fa > 0 else b].params if a != b else seen[root].params
    return ThresholdResult(
        critical_value=root,
        optimal_alpha=p["alpha"],
        optimal_q=p["q"],
        optimal_theta=p["theta"] if family.kind == "loss-partial" else None,
        optimal_phi_a=p["phi_a"] if family.kind == "loss-partial" else None,
        iterations=iterations,
        residual_rate=residual,
        normalized=seen[root].normalized,
    )


# ---------------------------------------------------------------------------
# sweeps

SWEEP_PARAMETERS = ("delta", "eta", "s", "alpha", "q", "theta")


@dataclass(frozen=True)
class SweepSpec:
    """Row-per-point sweep over one parameter.

    ``fixed`` holds the remaining parameters, e.g. ``model``, ``alpha``,
    ``q``, ``optimize`` (list of names) and ``maxq``.
    """

    parameter: str
    lo: float
    hi: float
    points: int
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise DomainError(f"cannot sweep {self.parameter!r}")
        if not self.lo < self.hi:
            raise DomainError("sweep range needs lo < hi")
        if self.points < 2:
            raise DomainError("sweep needs at least 2 points")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


def _family_from(fixed: dict) -> ModelFamily:
    return ModelFamily(
        fixed.get("model", "depolarizing"),
        bool(fixed.get("bob_optimal", False)),
        float(fixed.get("visibility", 1.0)),
    )


def sweep_row(spec: SweepSpec, value: float) -> dict:
    """One sweep row; errors are reported in the ``error`` column."""
    f = dict(spec.fixed)
    row = {spec.parameter: float(value)}
    try:
        if spec.parameter == "s" or f.get("model") == "bound":
            params = BoundParams(float(f.get("q", 0.0)), float(f.get("alpha", 1.0)))
            s = float(value) if spec.parameter == "s" else float(f["s"])
            if spec.parameter in ("alpha", "q"):
                params = replace(params, **{spec.parameter: float(value)})
            ev = entropy_bound(params, s)
            row.update(s_alpha=s, entropy_bound=ev.value, branch=ev.branch.value,
                       s_star=ev.s_star, h_a_given_b=None, rate=None, error=None)
            return row
        family = _family_from(f)
        channel = family.channel_parameter
        x = float(value) if spec.parameter == channel else float(f[channel])
        fixed_params = {k: float(f[k]) for k in FREE_PARAMETERS if k in f}
        if spec.parameter in FREE_PARAMETERS:
            fixed_params[spec.parameter] = float(value)
        opt_flags = [n for n in f.get("optimize", []) if n != spec.parameter]
        maxq = bool(f.get("maxq", False))
        opt = maximize_rate(family, x, opt_flags, fixed_params, maxq)
        p = opt.params
        entry = {"alpha": p["alpha"], "q": p["q"]}
        if family.kind == "loss-partial":
            entry.update(theta=p["theta"], phi_a=p["phi_a"])
        row.update(entry)
        if maxq:
            row.update(s_alpha=None, entropy_bound=None, branch=None, s_star=None,
                       h_a_given_b=None, rate=opt.value, error=None)
            return row
        model = family.model(x, p["theta"], p["phi_a"])
        res = models.devetak_winter(model, p["q"], p["alpha"])
        row.update(s_alpha=res.s_alpha, entropy_bound=res.entropy_bound.value,
                   branch=res.entropy_bound.branch.value, s_star=res.entropy_bound.s_star,
                   h_a_given_b=res.h_a_given_b, rate=res.rate, error=None)
    except (DomainError, NumericalError, KeyError) as exc:
        row.update(error=f"{type(exc).__name__}: {exc}")
    return row


def _worker_count() -> int:
    env = os.environ.get("NUM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep(spec: SweepSpec, workers: int | None = None) -> list[dict]:
    """Evaluate every point of the sweep; output order follows the input grid."""
    values = spec.values()
    workers = _worker_count() if workers is None else workers
    if workers <= 1 or len(values) < 2:
        return [sweep_row(spec, v) for v in values]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(sweep_row, [spec] * len(values), values))
