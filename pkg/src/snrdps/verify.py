"""Brute-force oracles for every analytic shortcut used by the bounds.

Each ``verify_*`` function returns a list of :class:`VerifyReport`. Every
check also runs one deliberately corrupted instance (``control=True``)
that must be reported as failing; a control that passes means the check
has lost its teeth.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from snrdps.bounds import (
    MINUS,
    PLUS,
    build_bound_curve,
    omega_minus,
    omega_minus_nu2_matrix,
    omega_plus_analytic,
    omega_plus_numeric,
    restricted_plus_matrix,
    theorem1_bound,
)
from snrdps.linalg import InvalidInputError, largest_eigenvalue
from snrdps.povm import (
    ProtocolParams,
    build_fullspace_error_ops,
    occupations_of_weight,
    pi_bit,
    pi_phase,
    prob_actual_mixed,
    prob_dial,
    reduced_bit_target,
    reduced_phase_target,
)

BRUTE_FORCE_MAX_L = 12
DEFAULT_SEED = 20240607


@dataclass(frozen=True)
class VerifyReport:
    name: str
    instance: str
    deviation: float
    tolerance: float
    seed: int | None = None
    control: bool = False
    seconds: float = 0.0

    def __post_init__(self):
        if not self.deviation >= 0:
            raise InvalidInputError("deviation must be a non-negative number")

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance

    @property
    def ok(self) -> bool:
        """True when the outcome is the expected one (controls must fail)."""
        return self.passed != self.control


def _params_range(Ls):
    return [ProtocolParams(L, t) for L in Ls for t in range(1, (L + 1) // 2) if t < L / 2]


# -- dial vs actual interferometer ----------------------------------------

def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random full-rank complex density operator (Ginibre construction)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _lemma1_deviation(params: ProtocolParams, rhos, weights) -> float:
    """Max over states, r, s and pairs of |Pr_dial - 2 Pr_actual|."""
    L = params.L
    pairs = [(i, j) for i in range(1, L + 1) for j in range(i + 1, L + 1)]
    worst = 0.0
    for rho in rhos:
        for r in params.delays:
            for s in (0, 1):
                for pair in pairs:
                    dial = prob_dial(rho, params, r, s, pair)
                    actual = prob_actual_mixed(rho, params, r, s, pair, weights)
                    worst = max(worst, abs(dial - 2 * actual))
    return worst


def verify_lemma1(Ls=range(3, 9), trials: int = 100, seed: int = DEFAULT_SEED,
                  tol: float = 1e-12, corrupt: bool = False) -> list[VerifyReport]:
    """Dial-measurement probabilities are twice the real setup's, state by state."""
    if max(Ls) > 8:
        raise InvalidInputError("the dial check is limited to L <= 8")
    rng = np.random.default_rng(seed)
    reports = []
    for params in _params_range(Ls):
        start = time.perf_counter()
        rhos = np.stack([random_density(params.L, rng) for _ in range(trials)])
        weights = (0.6, 0.4) if corrupt else (0.5, 0.5)
        dev = _lemma1_deviation(params, rhos, weights)
        reports.append(VerifyReport("lemma1", f"{params} trials={trials}", dev, tol, seed,
                                    seconds=time.perf_counter() - start))
    control = ProtocolParams(5, 2)
    rhos = np.stack([random_density(control.L, rng) for _ in range(trials)])
    dev = _lemma1_deviation(control, rhos, (0.6, 0.4))
    reports.append(VerifyReport("lemma1", f"{control} weights=0.6/0.4", dev, tol, seed,
                                control=True))
    return reports


# -- reduced error operators -------------------------------------------------

APPENDIX_B_CASES = ((4, 1), (5, 1), (5, 2), (6, 2))


def _operator_deviations(params: ProtocolParams, drop_wrap: bool) -> tuple[float, float]:
    ops = build_fullspace_error_ops(params, drop_wrap_branch=drop_wrap)
    u = ops.unitary
    bit = np.abs(u @ ops.e_bit @ u.T - reduced_bit_target(params)).max()
    phase = np.abs(u @ ops.e_phase @ u.T - reduced_phase_target(params)).max()
    return float(bit), float(phase)


def verify_appendixB(cases=APPENDIX_B_CASES, tol: float = 1e-12,
                     corrupt: bool = False) -> list[VerifyReport]:
    """Full-space error operators conjugate to the reduced block forms."""
    reports = []
    for L, t in cases:
        params = ProtocolParams(L, t)
        start = time.perf_counter()
        bit, phase = _operator_deviations(params, drop_wrap=corrupt)
        elapsed = time.perf_counter() - start
        reports.append(VerifyReport("appendixB-bit", str(params), bit, tol, seconds=elapsed))
        reports.append(VerifyReport("appendixB-phase", str(params), phase, tol,
                                    seconds=elapsed))
    control = ProtocolParams(5, 2)
    bit, _ = _operator_deviations(control, drop_wrap=True)
    reports.append(VerifyReport("appendixB-bit", f"{control} without wrap branch", bit, tol,
                                control=True))
    return reports


# -- eigenvalue quantities ---------------------------------------------------

def brute_force_omega(params: ProtocolParams, nu: int, lam: float, branch: str) -> float:
    """Exact branch eigenvalue by enumerating every admissible pattern.

    ``plus``: all patterns of weight ``nu + 1``, matrix restricted to the
    support. ``minus``: all patterns of weight ``nu - 1``, full space.
    """
    if params.L > BRUTE_FORCE_MAX_L:
        raise InvalidInputError(f"exhaustive search is limited to L <= {BRUTE_FORCE_MAX_L}")
    if lam < 0:
        raise InvalidInputError("lambda must be non-negative")
    if branch == PLUS:
        weight = nu + 1
    elif branch == MINUS:
        weight = nu - 1
    else:
        raise InvalidInputError(f"unknown branch {branch!r}")
    if not 0 <= weight <= params.L:
        raise InvalidInputError(f"no patterns of weight {weight} for L={params.L}")
    pb = pi_bit(params)
    best = -np.inf
    for a in occupations_of_weight(params.L, weight):
        if branch == PLUS:
            val = largest_eigenvalue(restricted_plus_matrix(params, a, lam))
        else:
            val = largest_eigenvalue(pi_phase(params, a) - lam * pb)
        best = max(best, val)
    return float(best)


LEMMA2_LAMBDAS = (0.0, 0.5, 1.0, 2.0, 10.0)


def verify_lemma2(Ls=range(8, 13), ts=(1, 2), lambdas=LEMMA2_LAMBDAS,
                  tol: float = 1e-9, corrupt: bool = False) -> list[VerifyReport]:
    """Closed-form plus-branch eigenvalue against exhaustive enumeration."""
    reports = []
    for L in Ls:
        for t in ts:
            params = ProtocolParams(L, t)
            for nu in range(0, params.t + 1):
                start = time.perf_counter()
                card = params.card_r + (2 if corrupt else 0)
                dev = max(abs(brute_force_omega(params, nu, lam, PLUS)
                              - omega_plus_analytic(nu, card, lam))
                          for lam in lambdas)
                reports.append(VerifyReport("lemma2", f"{params} nu={nu}", dev, tol,
                                            seconds=time.perf_counter() - start))
    control = ProtocolParams(10, 2)
    dev = max(abs(brute_force_omega(control, 1, lam, PLUS)
                  - omega_plus_analytic(1, control.card_r + 2, lam)) for lam in lambdas)
    reports.append(VerifyReport("lemma2", f"{control} nu=1 vs |R|=6 formula", dev, tol,
                                control=True))
    return reports


def verify_fastpaths(tol: float = 1e-10, corrupt: bool = False) -> list[VerifyReport]:
    """Representative-pattern shortcuts against exhaustive enumeration.

    Covers the consecutive-ones pattern beyond the closed-form range, the
    single representative of the two-photon minus branch, and the explicit
    two-photon matrix.
    """
    lambdas = (0.0, 0.3, 0.7, 1.0, 3.0)
    reports = []
    for L, t, nu in ((8, 1, 2), (10, 1, 2), (10, 2, 3), (11, 2, 4)):
        params = ProtocolParams(L, t)
        dev = max(abs(brute_force_omega(params, nu, lam, PLUS)
                      - omega_plus_numeric(params, nu + corrupt, lam)) for lam in lambdas)
        reports.append(VerifyReport("fastpath-consecutive", f"{params} nu={nu}", dev, tol))
    for L, t in ((8, 1), (10, 2), (12, 3)):
        params = ProtocolParams(L, t)
        dev = 0.0
        for lam in lambdas:
            fast = omega_minus(params, 2, lam) + (0.01 if corrupt else 0.0)
            explicit = largest_eigenvalue(omega_minus_nu2_matrix(params, lam))
            brute = brute_force_omega(params, 2, lam, MINUS)
            dev = max(dev, abs(fast - brute), abs(explicit - brute))
        reports.append(VerifyReport("fastpath-minus", f"{params} nu=2", dev, tol))
    params = ProtocolParams(10, 2)
    dev = max(abs(brute_force_omega(params, 1, lam, MINUS)) for lam in lambdas)
    reports.append(VerifyReport("fastpath-minus", f"{params} nu=1", dev, tol))
    # control: a scattered pattern is not the maximiser
    scattered = np.zeros(10, dtype=int)
    scattered[[0, 4, 8]] = 1
    dev = max(abs(brute_force_omega(params, 2, lam, PLUS)
                  - largest_eigenvalue(restricted_plus_matrix(params, scattered, lam)))
              for lam in lambdas)
    reports.append(VerifyReport("fastpath-consecutive", f"{params} nu=2 scattered pattern",
                                dev, tol, control=True))
    return reports


# -- largest-eigenvalue monotonicity ---------------------------------------

def _fact1_pair(dim: int, rng: np.random.Generator):
    a = rng.uniform(-1, 1, size=(dim, dim))
    a = (a + a.T) / 2
    off = ~np.eye(dim, dtype=bool)
    a[off] = np.abs(a[off])
    lower = a - np.abs(rng.normal(size=(dim, dim)))
    lower = (lower + lower.T) / 2
    lower[off] = np.clip(lower[off], 0, None)
    return a, np.minimum(lower, a)


def verify_fact1(trials: int = 500, dims=range(2, 13), seed: int = DEFAULT_SEED,
                 tol: float = 1e-10, corrupt: bool = False) -> list[VerifyReport]:
    """Entrywise-smaller matrix with non-negative off-diagonals has a smaller top eigenvalue."""
    rng = np.random.default_rng(seed)
    dims = list(dims)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(trials):
        a, smaller = _fact1_pair(int(rng.choice(dims)), rng)
        if corrupt:
            smaller, a = a, smaller
        worst = max(worst, largest_eigenvalue(smaller) - largest_eigenvalue(a))
    reports = [VerifyReport("fact1", f"{trials} random pairs", max(worst, 0.0), tol, seed,
                            seconds=time.perf_counter() - start)]
    # control: a negative off-diagonal breaks the premise and the conclusion
    a = np.zeros((2, 2))
    smaller = np.array([[0.0, -1.0], [-1.0, 0.0]])
    dev = max(largest_eigenvalue(smaller) - largest_eigenvalue(a), 0.0)
    reports.append(VerifyReport("fact1", "negative off-diagonal", dev, tol, control=True))
    return reports


# -- single-photon closed form ---------------------------------------------

def verify_theorem1(card_rs=(2, 4, 6, 8, 10), L: int = 32, grid_points: int = 200,
                    tol: float = 1e-6, corrupt: bool = False) -> list[VerifyReport]:
    """Generic single-photon pipeline (numeric eigenvalues) against the closed form.

    The pipeline must never undercut the closed form by more than 1e-9;
    that is folded into the deviation as an infinite penalty.
    """
    xs = np.linspace(0.0, 0.5, grid_points)
    reports = []
    for card in card_rs:
        params = ProtocolParams(L, card // 2)
        start = time.perf_counter()
        curve = build_bound_curve(params, 1, force_numeric=True)
        generic = np.asarray(curve(xs))
        target = theorem1_bound(card + 2 if corrupt else card, xs)
        diff = generic - target
        dev = float(np.abs(diff).max())
        if diff.min() < -1e-9 and not corrupt:
            dev = float("inf")
        reports.append(VerifyReport("theorem1", f"{params}", dev, tol,
                                    seconds=time.perf_counter() - start))
    params = ProtocolParams(L, 1)
    generic = np.asarray(build_bound_curve(params, 1, force_numeric=True)(xs))
    dev = float(np.abs(generic - theorem1_bound(4, xs)).max())
    reports.append(VerifyReport("theorem1", f"{params} vs |R|=4 formula", dev, tol,
                                control=True))
    return reports


CHECKS = {
    "appendixB": verify_appendixB,
    "fact1": verify_fact1,
    "fastpaths": verify_fastpaths,
    "lemma1": verify_lemma1,
    "lemma2": verify_lemma2,
    "theorem1": verify_theorem1,
}


def run_checks(names=None, seed: int = DEFAULT_SEED, corrupt: bool = False,
               lemma1_Ls=None) -> list[VerifyReport]:
    """Run the named checks (all by default); reports sorted by check name."""
    names = sorted(CHECKS) if not names else sorted(names)
    reports = []
    for name in names:
        if name not in CHECKS:
            raise InvalidInputError(f"unknown check {name!r}; choose from {sorted(CHECKS)}")
        kwargs = {"corrupt": corrupt}
        if name in ("lemma1", "fact1"):
            kwargs["seed"] = seed
        if name == "lemma1" and lemma1_Ls is not None:
            kwargs["Ls"] = lemma1_Ls
        reports.extend(CHECKS[name](**kwargs))
    return sorted(reports, key=lambda r: (r.name, r.control))
