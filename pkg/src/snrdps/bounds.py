"""Phase-error bounds per photon number and their entropy envelopes.

For each photon number ``nu`` the phase-error rate is bounded by supporting
lines ``lam * e_bit + Omega(lam)``, where ``Omega`` is the largest
eigenvalue of ``Pi_phase(a) - lam * Pi_bit`` over the admissible register
patterns ``a``. Two families of patterns contribute: weight ``nu - 1``
(the "minus" branch, full single-photon space) and weight ``nu + 1``
(the "plus" branch, restricted to the support of ``a``). The final bound
mixes the two branches through an upper concave envelope.

For ``nu >= 3`` no bound is attempted: the phase error is taken to be 1/2,
i.e. every such event is assumed fully leaked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from snrdps.linalg import (
    InvalidInputError,
    PLCurve,
    largest_eigenvalue,
    minimize_on_grid,
    upper_concave_envelope,
)
from snrdps.povm import (
    ProtocolParams,
    band_matrix,
    consecutive_occupation,
    pi_bit,
    pi_phase,
)

PLUS, MINUS = "plus", "minus"
MAX_BOUNDED_NU = 2
DEFAULT_EBIT_POINTS = 400


@dataclass(frozen=True)
class LambdaGrid:
    """``lam = 0`` plus ``count`` log-spaced points on ``[lo, hi]``."""

    lo: float = 1e-4
    hi: float = 1e4
    count: int = 512

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise InvalidInputError("need 0 < lo < hi")
        if self.count < 64:
            raise InvalidInputError("lambda grid needs at least 64 points")

    def points(self) -> np.ndarray:
        return np.concatenate([[0.0], np.geomspace(self.lo, self.hi, self.count)])


def binary_entropy(x):
    """``-x log2 x - (1-x) log2 (1-x)`` with ``h(0) = h(1) = 0``."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise InvalidInputError("binary entropy argument must lie in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -arr * np.log2(arr) - (1 - arr) * np.log2(1 - arr)
    out = np.where((arr == 0) | (arr == 1), 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


# -- Omega functions --------------------------------------------------------

def omega_plus_analytic(nu: int, card_r: int, lam: float) -> float:
    """Closed form of the plus-branch eigenvalue, valid for ``nu <= |R|/2``."""
    if not 0 <= nu <= card_r / 2:
        raise InvalidInputError(f"closed form needs 0 <= nu <= |R|/2, got nu={nu}, |R|={card_r}")
    if lam < 0:
        raise InvalidInputError("lambda must be non-negative")
    return (1 - lam) / 2 + nu * (1 + lam) / (2 * card_r)


def restricted_plus_matrix(params: ProtocolParams, a, lam: float) -> np.ndarray:
    """``P_a (Pi_phase(a) - lam Pi_bit) P_a`` restricted to the support of ``a``."""
    a = np.asarray(a)
    support = np.flatnonzero(a)
    if len(support) == 0:
        raise InvalidInputError("plus-branch pattern must have at least one 1")
    m = pi_phase(params, a) - lam * pi_bit(params)
    return m[np.ix_(support, support)]


def omega_plus_numeric(params: ProtocolParams, nu: int, lam: float) -> float:
    """Plus-branch eigenvalue from the ``nu + 1`` consecutive-ones pattern.

    Consecutive ones make every entry of the reduced matrix as large as it
    can be, and with non-negative off-diagonals that maximises the top
    eigenvalue; the exhaustive search in :mod:`snrdps.verify` confirms it.
    """
    if not 0 <= nu <= params.L - 1:
        raise InvalidInputError(f"need 0 <= nu <= L - 1, got nu={nu}")
    if lam < 0:
        raise InvalidInputError("lambda must be non-negative")
    a = consecutive_occupation(params.L, nu + 1)
    return largest_eigenvalue(restricted_plus_matrix(params, a, lam))


def minus_representative(params: ProtocolParams, nu: int) -> np.ndarray:
    """Register pattern used for the minus branch (one class per ``nu``)."""
    a = np.zeros(params.L, dtype=int)
    if nu == 2:
        a[params.t] = 1  # t zeros, then the single one
    return a


def omega_minus_nu2_matrix(params: ProtocolParams, lam: float) -> np.ndarray:
    """The explicit ``L x L`` minus-branch matrix for two photons."""
    L, t, card = params.L, params.t, params.card_r
    diag = np.zeros(L)
    diag[:t] = 1.0
    diag[t] = card
    diag[t + 1:2 * t + 1] = 1.0
    return (np.diag(diag) / (2 * card) - lam / 2 * np.eye(L)
            + lam / (2 * card) * band_matrix(t, L))


def omega_minus(params: ProtocolParams, nu: int, lam: float) -> float:
    """Minus-branch eigenvalue for ``nu`` in {1, 2}."""
    if nu not in (1, 2):
        raise InvalidInputError("minus branch is only evaluated for nu = 1, 2")
    if lam < 0:
        raise InvalidInputError("lambda must be non-negative")
    m = pi_phase(params, minus_representative(params, nu)) - lam * pi_bit(params)
    return largest_eigenvalue(m)


def omega(params: ProtocolParams, nu: int, lam: float) -> float:
    """Combined eigenvalue bound; 1 for ``nu >= 3``."""
    if nu >= 3:
        return 1.0
    plus = omega_plus(params, nu, lam)
    if nu == 0:
        return plus
    return max(plus, omega_minus(params, nu, lam))


def omega_plus(params: ProtocolParams, nu: int, lam: float) -> float:
    if nu <= params.card_r / 2:
        return omega_plus_analytic(nu, params.card_r, lam)
    return omega_plus_numeric(params, nu, lam)


def omega_ordering_violations(params: ProtocolParams, grid: LambdaGrid = LambdaGrid(),
                              tol: float = 1e-12) -> list[tuple[int, float, float]]:
    """Where ``Omega^(nu)(lam) > Omega^(nu+1)(lam)`` on the grid, for nu = 0, 1.

    The allocation of detections to photon numbers assumes the ordering
    holds; an empty list means it does on the sampled points.
    """
    bad = []
    for lam in grid.points():
        vals = [omega(params, nu, lam) for nu in range(MAX_BOUNDED_NU + 1)]
        for nu in range(MAX_BOUNDED_NU):
            if vals[nu] > vals[nu + 1] + tol:
                bad.append((nu, float(lam), vals[nu] - vals[nu + 1]))
    return bad


# -- branch bounds f(x) = min_lam lam x + Omega(lam) --------------------------

def plus_threshold(nu: int, card_r: int) -> float:
    return 0.5 - nu / (2 * card_r)


def plus_plateau(nu: int, card_r: int) -> float:
    return 0.5 + nu / (2 * card_r)


class BranchBound:
    """``x -> max(0, min_lam lam x + Omega_branch(lam))`` for one branch.

    Uses the closed form when the plus branch admits one, otherwise a
    grid search over ``lam`` refined between the neighbouring grid points.
    ``Omega`` is convex in ``lam``, so the refinement is reliable.
    """

    def __init__(self, params: ProtocolParams, nu: int, branch: str,
                 grid: LambdaGrid = LambdaGrid(), force_numeric: bool = False):
        if branch not in (PLUS, MINUS):
            raise InvalidInputError(f"unknown branch {branch!r}")
        if branch == MINUS and nu not in (1, 2):
            raise InvalidInputError("minus branch exists only for nu = 1, 2")
        self.params, self.nu, self.branch = params, nu, branch
        self.closed_form = (branch == PLUS and nu <= params.card_r / 2 and not force_numeric)
        self._lams = grid.points()
        self._grid_omega = None
        self._jump = None
        if branch == MINUS:
            a = minus_representative(params, nu)
            self._fixed, self._slope = pi_phase(params, a), pi_bit(params)
        elif not self.closed_form:
            a = consecutive_occupation(params.L, nu + 1)
            self._fixed = restricted_plus_matrix(params, a, 0.0)
            self._slope = self._fixed - restricted_plus_matrix(params, a, 1.0)
            # below the slope's smallest eigenvalue lam * x + Omega(lam) is unbounded below
            self._jump = float(np.linalg.eigvalsh(self._slope)[0])

    def omega(self, lam: float) -> float:
        if self.closed_form:
            return omega_plus_analytic(self.nu, self.params.card_r, lam)
        return largest_eigenvalue(self._fixed - lam * self._slope)

    @property
    def grid_omega(self) -> np.ndarray:
        if self._grid_omega is None:
            self._grid_omega = np.array([self.omega(lam) for lam in self._lams])
        return self._grid_omega

    def breakpoints(self) -> list[float]:
        """Abscissae where the bound jumps from zero (plus branch only)."""
        if self.closed_form:
            return [plus_threshold(self.nu, self.params.card_r)]
        if self._jump is not None and 0 < self._jump <= 0.5:
            return [self._jump]
        return []

    def solve(self, x: float) -> tuple[float, float | None]:
        """Return ``(f(x), lam)`` with ``lam`` the minimiser found.

        ``lam`` is ``None`` when the clamp at zero is active or for the
        closed form. Any ``lam`` gives the valid upper line
        ``lam * x' + Omega(lam)`` at every ``x'``.
        """
        if self.closed_form:
            card = self.params.card_r
            return (plus_plateau(self.nu, card) if x >= plus_threshold(self.nu, card)
                    else 0.0), None
        if self._jump is not None and x < self._jump:
            return 0.0, None
        values = self._lams * x + self.grid_omega
        if values.min() <= 0:
            return 0.0, None
        lam, best = minimize_on_grid(lambda lam: lam * x + self.omega(lam), self._lams,
                                     tol=1e-9, values=values)
        i = int(np.argmin(values))
        if values[i] <= best:
            lam, best = float(self._lams[i]), float(values[i])
        return best, lam

    def __call__(self, x: float) -> float:
        return self.solve(x)[0]

    def upper_bound(self, xs):
        """Knots and a vectorised piecewise-linear function bounding ``f`` from above.

        The numeric branch is concave where positive, so interpolating its
        samples would undercut it. Instead every sample contributes its
        supporting line and the bound is ``max(0, min of the lines)``, whose
        kinks (line intersections and zero crossings) are returned as knots.
        The closed form is returned exactly.
        """
        xs = np.asarray(xs, dtype=float)
        if self.closed_form:
            return xs, np.vectorize(self.__call__, otypes=[float])
        sols = [self.solve(x) for x in xs]
        lines = np.array([(lam, v - lam * x) for x, (v, lam) in zip(xs, sols)
                          if lam is not None])
        jump = self._jump

        def g(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            if len(lines) == 0:
                return np.zeros_like(x)
            out = np.min(lines[None, :, 0] * x[:, None] + lines[None, :, 1], axis=1)
            out = np.maximum(out, 0.0)
            if jump is not None:
                out[x < jump] = 0.0
            return out

        extra = []
        for (l0, c0), (l1, c1) in zip(lines, lines[1:]):
            if l0 > l1:
                extra.append((c1 - c0) / (l0 - l1))
        extra.extend(-c / lam for lam, c in lines if lam > 0)
        knots = np.unique(np.concatenate([xs, extra]))
        return knots[(knots >= 0) & (knots <= 0.5)], g


def eph_branch_bound(params: ProtocolParams, nu: int, branch: str, x: float,
                     grid: LambdaGrid = LambdaGrid()) -> float:
    if not 0 <= x <= 0.5:
        raise InvalidInputError("bit error rate must lie in [0, 1/2]")
    return BranchBound(params, nu, branch, grid)(x)


# -- mixed bound curves ------------------------------------------------------

def theorem1_bound(card_r: int, e_bit):
    """Closed-form single-photon bound ``min(slope * e_bit, plateau)``."""
    slope = (card_r + 1) / (card_r - 1)
    return np.minimum(slope * np.asarray(e_bit, dtype=float), plus_plateau(1, card_r))


def ebit_samples(n_points: int = DEFAULT_EBIT_POINTS, extra=()) -> np.ndarray:
    xs = np.concatenate([np.linspace(0.0, 0.5, n_points), np.asarray(extra, dtype=float)])
    return np.unique(xs[(xs >= 0) & (xs <= 0.5)])


@dataclass
class BoundCurve:
    """Phase-error upper bound versus bit error rate for one photon number."""

    params: ProtocolParams
    nu: int
    xs: np.ndarray
    plus: np.ndarray
    minus: np.ndarray | None
    curve: PLCurve = field(repr=False)

    def __call__(self, e_bit):
        return self.curve(e_bit)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.curve(self.xs))

    def entropy_values(self) -> np.ndarray:
        return binary_entropy(np.minimum(self.values, 0.5))


def build_bound_curve(params: ProtocolParams, nu: int,
                      n_points: int = DEFAULT_EBIT_POINTS,
                      grid: LambdaGrid = LambdaGrid(),
                      force_numeric: bool = False) -> BoundCurve:
    """Sample both branches and mix them through the upper concave envelope.

    With only the plus branch (``nu = 0``) no mixing happens and the
    clamped branch bound is returned as is. Branch jump locations are added
    to the samples so the envelope is exact at the kinks, and each branch
    contributes knots of a piecewise-linear upper bound so the envelope
    dominates the branches between samples too.
    """
    if not 0 <= nu <= MAX_BOUNDED_NU:
        raise InvalidInputError(f"bound curves exist for nu = 0..{MAX_BOUNDED_NU}")
    fplus = BranchBound(params, nu, PLUS, grid, force_numeric=force_numeric)
    xs = ebit_samples(n_points, fplus.breakpoints())
    kx_plus, g_plus = fplus.upper_bound(xs)
    plus = g_plus(xs)
    if nu == 0:
        return BoundCurve(params, nu, xs, plus, None, _step_curve(xs, plus))
    fminus = BranchBound(params, nu, MINUS, grid)
    kx_minus, g_minus = fminus.upper_bound(xs)
    minus = g_minus(xs)
    knots = np.unique(np.concatenate([kx_plus, kx_minus]))
    upper = np.maximum(g_plus(knots), g_minus(knots))
    env = upper_concave_envelope(np.column_stack([knots, upper]))
    return BoundCurve(params, nu, xs, plus, minus, env)


def _step_curve(xs, ys) -> PLCurve:
    # A jump at x0 is kept as a near-vertical segment ending exactly at x0.
    pts_x, pts_y = [], []
    for i, (x, y) in enumerate(zip(xs, ys)):
        if i > 0 and y != ys[i - 1]:
            pts_x.append(np.nextafter(x, -np.inf))
            pts_y.append(ys[i - 1])
        pts_x.append(x)
        pts_y.append(y)
    return PLCurve(tuple(pts_x), tuple(pts_y))


@lru_cache(maxsize=64)
def bound_curve(params: ProtocolParams, nu: int,
                n_points: int = DEFAULT_EBIT_POINTS,
                grid: LambdaGrid = LambdaGrid()) -> BoundCurve:
    """Cached :func:`build_bound_curve`; curves depend only on the arguments."""
    return build_bound_curve(params, nu, n_points, grid)


def eph_bound(params: ProtocolParams, nu: int, e_bit: float,
              n_points: int = DEFAULT_EBIT_POINTS) -> float:
    """Upper bound on the ``nu``-photon phase-error rate.

    Not capped: the single-photon plateau is ``1/2 + 1/(2|R|)``. Use
    ``min(bound, 1/2)`` before taking entropies.
    """
    if not 0 <= e_bit <= 0.5:
        raise InvalidInputError("bit error rate must lie in [0, 1/2]")
    if nu > MAX_BOUNDED_NU:
        return 0.5
    return float(bound_curve(params, nu, n_points)(e_bit))


# -- entropy envelopes -------------------------------------------------------

@dataclass(frozen=True)
class EntropyEnvelope:
    """Supporting-line intercepts ``Omega_h(gamma)`` for one photon number.

    Stored as the upper hull of ``(e_bit, h(min(bound, 1/2)))``; only hull
    vertices matter for the supremum.
    """

    nu: int
    hull: PLCurve

    def __call__(self, gamma):
        g = np.atleast_1d(np.asarray(gamma, dtype=float))
        xs, ys = np.asarray(self.hull.xs), np.asarray(self.hull.ys)
        vals = np.max(ys[None, :] - g[:, None] * xs[None, :], axis=1)
        return float(vals[0]) if np.ndim(gamma) == 0 else vals

    def breakpoints(self) -> np.ndarray:
        """Values of gamma at which ``Omega_h`` changes slope."""
        s = self.hull.slopes()
        return s[s >= 0]


def _entropy_slope(y):
    """Derivative of ``h(min(y, 1/2))``; infinite at ``y = 0``."""
    if y >= 0.5:
        return 0.0
    if y <= 0:
        return np.inf
    return float(np.log2((1 - y) / y))


def entropy_upper_points(curve: PLCurve, samples=()) -> np.ndarray:
    """Knots of a piecewise-linear upper bound on ``x -> h(min(curve(x), 1/2))``.

    The composition is concave on every linear piece of ``curve``, so the
    two endpoint tangents of each piece bound it from above and their
    intersection is the extra knot. Pieces are first subdivided at
    ``samples``, at the crossing of 1/2, and geometrically towards the point
    where the bound leaves zero (the entropy slope is infinite there).
    """
    xs = np.unique(np.concatenate([curve.xs, np.asarray(samples, dtype=float)]))
    ys = np.asarray(curve(xs))
    extra = []
    for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:]):
        if y0 < 0.5 < y1:
            extra.append(x0 + (0.5 - y0) / (y1 - y0) * (x1 - x0))
        if y0 == 0 < y1:
            extra.extend(x0 + (x1 - x0) * 2.0 ** -np.arange(1, 60))
    xs = np.unique(np.concatenate([xs, extra]))
    ys = np.asarray(curve(xs))
    hs = binary_entropy(np.clip(ys, 0.0, 0.5))
    pts = list(zip(xs, hs))
    for x0, x1, y0, y1, h0, h1 in zip(xs, xs[1:], ys, ys[1:], hs, hs[1:]):
        s = (y1 - y0) / (x1 - x0)
        if s < 0:
            pts.append((x1, max(h0, h1)))  # bound curves are nondecreasing; stay safe
            continue
        if s == 0:
            continue
        d0, d1 = _entropy_slope(y0) * s, _entropy_slope(y1) * s
        if np.isinf(d1):
            continue
        if np.isinf(d0):
            pts.append((x0, h1 - d1 * (x1 - x0)))
        elif d0 > d1:
            xc = (h1 - h0 + d0 * x0 - d1 * x1) / (d0 - d1)
            pts.append((xc, h0 + d0 * (xc - x0)))
    return np.array(pts)


@lru_cache(maxsize=64)
def entropy_envelope(params: ProtocolParams, nu: int,
                     n_points: int = DEFAULT_EBIT_POINTS) -> EntropyEnvelope:
    if nu > MAX_BOUNDED_NU:
        return EntropyEnvelope(nu, PLCurve((0.0, 0.5), (1.0, 1.0)))
    bc = bound_curve(params, nu, n_points)
    hull = upper_concave_envelope(entropy_upper_points(bc.curve, bc.xs))
    return EntropyEnvelope(nu, hull)


def omega_h(params: ProtocolParams, nu: int, gamma: float,
            n_points: int = DEFAULT_EBIT_POINTS) -> float:
    """``sup_x h(min(bound(x), 1/2)) - gamma x`` over the bit-error samples."""
    if gamma < 0:
        raise InvalidInputError("gamma must be non-negative")
    return entropy_envelope(params, nu, n_points)(gamma)
