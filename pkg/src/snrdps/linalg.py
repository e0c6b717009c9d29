"""Small dense numerical kernels used throughout the package.

Everything here works on tiny problems (matrices of a few hundred rows at
most), so the routines favour clarity and determinism over speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

DEFAULT_GRID_SIZE = 256


class InvalidInputError(ValueError):
    """Raised when a numerical routine receives arguments outside its domain."""


def sym_operator(entries) -> np.ndarray:
    """Return a read-only, exactly symmetric float copy of ``entries``.

    The upper triangle is mirrored onto the lower one, so tiny asymmetries
    produced by floating point accumulation are removed rather than
    averaged.
    """
    m = np.array(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    upper = np.triu(m)
    m = upper + np.triu(m, 1).T
    m.flags.writeable = False
    return m


def largest_eigenvalue(m, tol: float = 1e-12) -> float:
    """Largest eigenvalue of a real symmetric matrix.

    LAPACK's symmetric solver is accurate to a few ulps of the spectral
    norm, well inside any ``tol`` the callers use.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    if a.shape[0] == 1:
        return float(a[0, 0])
    return float(np.linalg.eigvalsh(a)[-1])


@dataclass(frozen=True)
class PLCurve:
    """Piecewise-linear curve through ``knots`` (x strictly increasing)."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or len(self.xs) < 1:
            raise InvalidInputError("knot arrays must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise InvalidInputError("knot abscissae must be strictly increasing")

    @property
    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.xs, self.ys))

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    def slopes(self) -> np.ndarray:
        xs, ys = np.asarray(self.xs), np.asarray(self.ys)
        return np.diff(ys) / np.diff(xs)

    def is_concave(self, tol: float = 1e-12) -> bool:
        s = self.slopes()
        return bool(np.all(np.diff(s) <= tol))


def upper_concave_envelope(points) -> PLCurve:
    """Least concave majorant of a finite point set on ``[min x, max x]``.

    Duplicate abscissae keep the largest ordinate. Uses the monotone-chain
    upper hull, so the returned knots are exactly the hull vertices with
    collinear interior points dropped.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError("points must be a sequence of (x, y) pairs")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("points must be finite")
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = pts[1:, 0] != pts[:-1, 0]
    pts = pts[keep]
    if len(pts) < 2:
        raise InvalidInputError("need at least two distinct abscissae")

    hull: list[tuple[float, float]] = []
    for x, y in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or below the chord hull[-2] -> (x, y)
            if (y2 - y1) * (x - x1) <= (y - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append((float(x), float(y)))
    xs, ys = zip(*hull)
    return PLCurve(tuple(xs), tuple(ys))


def minimize_scalar(f, lo: float, hi: float, tol: float = 1e-10,
                    grid_size: int = DEFAULT_GRID_SIZE):
    """Minimise ``f`` on ``[lo, hi]``: coarse grid, then bounded refinement.

    The grid picks the best sample; the refinement then searches the
    bracket formed by its two neighbours. For unimodal ``f`` this finds the
    minimiser to within ``tol``; for anything else the result is never
    worse than the best grid sample.

    Returns ``(x_best, f(x_best))``.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if not lo < hi:
        raise InvalidInputError("require lo < hi")
    if grid_size < 3:
        raise InvalidInputError("grid_size must be at least 3")
    grid = np.linspace(lo, hi, grid_size)
    return _refine_on_grid(f, grid, tol)


def _refine_on_grid(f, grid, tol, values=None):
    if values is None:
        values = np.array([f(x) for x in grid], dtype=float)
    i = int(np.argmin(values))
    best_x, best_f = float(grid[i]), float(values[i])
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    if b - a > tol:
        res = optimize.minimize_scalar(f, bounds=(a, b), method="bounded",
                                       options={"xatol": tol})
        if res.fun < best_f:
            best_x, best_f = float(res.x), float(res.fun)
    return best_x, best_f


def minimize_on_grid(f, grid, tol: float = 1e-10, values=None):
    """Like :func:`minimize_scalar` but with a caller-supplied sorted grid.

    ``values``, if given, must equal ``f`` on the grid and saves re-evaluating it.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise InvalidInputError("grid must be strictly increasing with >= 2 points")
    if values is not None and len(values) != len(grid):
        raise InvalidInputError("values must match the grid")
    return _refine_on_grid(f, grid, tol, values)
