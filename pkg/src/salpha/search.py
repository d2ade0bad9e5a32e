"""Small deterministic 1-D search routines used by the optimizers."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import NumericalError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9, max_iter: int = 200
) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]`` by golden-section search.

    The end points are compared against the interior optimum so that a
    maximum sitting on the boundary is not lost.
    """
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    for x in (lo, hi):
        fx = f(x)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def grid_golden_max(
    f: Callable[[float], float],
    xs: np.ndarray,
    tol: float = 1e-9,
    grid_values: np.ndarray | None = None,
) -> tuple[float, float]:
    """Coarse grid ``xs`` (sorted) followed by golden-section refinement.

    The refinement runs between the neighbours of the best grid point; the
    grid point itself wins if the refinement does not improve on it.
    ``grid_values`` may carry precomputed values of ``f`` on ``xs``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.array([f(x) for x in xs]) if grid_values is None else np.asarray(grid_values, dtype=float)
    ys = np.where(np.isnan(ys), -np.inf, ys)
    i = int(np.argmax(ys))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, len(xs) - 1)]
    x, fx = golden_max(f, float(a), float(b), tol=tol)
    if ys[i] >= fx:
        return float(xs[i]), float(ys[i])
    return x, fx


def alpha_grid(lo: float = 1e-3, hi: float = 3.0, points: int = 64) -> np.ndarray:
    """Uniform alpha grid with alpha = 1 (the CHSH kink) always included."""
    xs = np.linspace(lo, hi, points)
    if lo <= 1.0 <= hi:
        xs = np.union1d(xs, [1.0])
    return xs


def bisect_bracket(
    f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-10, max_iter: int = 200
) -> tuple[float, float, float, float, int]:
    """Shrink a sign-changing bracket of ``f`` to width ``xtol`` by bisection.

    Returns ``(lo, hi, f(lo), f(hi), iterations)``. An exact zero collapses
    the bracket onto it. Raises NumericalError if the end points do not
    bracket a root.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo, lo, flo, flo, 0
    if fhi == 0.0:
        return hi, hi, fhi, fhi, 0
    if np.sign(flo) == np.sign(fhi):
        raise NumericalError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    it = 0
    while abs(hi - lo) > xtol and it < max_iter:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        it += 1
        if fm == 0.0:
            return mid, mid, fm, fm, it
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return lo, hi, flo, fhi, it


def bisect_root(
    f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-10, max_iter: int = 200
) -> tuple[float, int]:
    """Locate a sign change of ``f`` in ``[lo, hi]`` by bisection.

    Returns the midpoint of the final bracket and the iteration count.
    """
    lo, hi, _, _, it = bisect_bracket(f, lo, hi, xtol, max_iter)
    return 0.5 * (lo + hi), it
