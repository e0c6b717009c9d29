"""Asymptotic key rate with Poisson sources over a lossy fibre.

The adversary attributes detections to the highest photon numbers first
(``eve_allocation``); the leaked information is bounded by mixing the
per-photon-number entropy envelopes (``HphBound``); the mean photon number
is optimised per distance (``optimize_mu``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import pdtrc

from snrdps.bounds import (
    DEFAULT_EBIT_POINTS,
    MAX_BOUNDED_NU,
    binary_entropy,
    entropy_envelope,
)
from snrdps.linalg import InvalidInputError, minimize_on_grid
from snrdps.povm import ProtocolParams

SNRDPS, RRDPS = "snrdps", "rrdps"


@dataclass(frozen=True)
class ChannelModel:
    """Detector efficiency ``eta0`` and fibre attenuation in dB/km."""

    eta0: float = 0.1
    atten_db_km: float = 0.2

    def __post_init__(self):
        if not 0 < self.eta0 <= 1:
            raise InvalidInputError("detector efficiency must lie in (0, 1]")
        if self.atten_db_km < 0:
            raise InvalidInputError("attenuation must be non-negative")

    def eta(self, km: float) -> float:
        if km < 0:
            raise InvalidInputError("fibre length must be non-negative")
        return self.eta0 * 10 ** (-self.atten_db_km * km / 10)


def poisson_p(nu: int, mean: float) -> float:
    if mean < 0 or nu < 0:
        raise InvalidInputError("need nu >= 0 and mean >= 0")
    if mean == 0:
        return 1.0 if nu == 0 else 0.0
    return math.exp(-mean + nu * math.log(mean) - math.lgamma(nu + 1))


def poisson_sf(nu: int, mean: float) -> float:
    """``P(N > nu)``; equals 1 for ``nu < 0``."""
    if nu < 0:
        return 1.0
    return float(pdtrc(nu, mean))


def detection_Q(L: int, mu: float, eta: float) -> float:
    """Probability that a block yields a detected event."""
    if L < 0 or mu < 0 or eta < 0:
        raise InvalidInputError("L, mu and eta must be non-negative")
    x = L * mu * eta
    return x / 2 * math.exp(-x)


@dataclass(frozen=True)
class Allocation:
    """Fractions of detections attributed to each photon number.

    ``q[nu]`` for ``nu = 0..len(q)-1``; ``beyond`` collects everything
    above. ``qtail`` is the share with three or more photons.
    """

    q: tuple[float, ...]
    beyond: float
    nu0: int

    @property
    def q0(self):
        return self.q[0]

    @property
    def q1(self):
        return self.q[1]

    @property
    def q2(self):
        return self.q[2]

    @property
    def qtail(self) -> float:
        return max(0.0, 1.0 - self.q0 - self.q1 - self.q2)


def find_nu0(Q: float, mean: float) -> int:
    """Smallest ``nu0`` with ``P(N > nu0) < Q <= P(N > nu0 - 1)``."""
    nu0 = 0
    while poisson_sf(nu0, mean) >= Q:
        nu0 += 1
        if nu0 > 10_000:
            raise RuntimeError("no admissible nu0; Q must lie in (0, 1]")
    return nu0


def eve_allocation(Q: float, L: int, mu: float, n_max: int = MAX_BOUNDED_NU) -> Allocation:
    """Adversarially optimal split of the detections by photon number.

    Multi-photon emissions are credited to detections first, each class
    limited by its Poisson weight, until the observed rate ``Q`` is
    exhausted.
    """
    if not 0 < Q <= 1:
        raise InvalidInputError("detection probability must lie in (0, 1]")
    n_max = max(n_max, MAX_BOUNDED_NU)
    mean = L * mu
    nu0 = find_nu0(Q, mean)
    q = []
    for nu in range(n_max + 1):
        if nu < nu0:
            q.append(0.0)
        elif nu == nu0:
            q.append(1.0 - poisson_sf(nu0, mean) / Q)
        else:
            q.append(poisson_p(nu, mean) / Q)
    beyond = max(0.0, 1.0 - sum(q))
    return Allocation(tuple(q), beyond, nu0)


class HphBound:
    """Bound on the leaked fraction ``h_ph / Q`` for one protocol setting.

    The entropy envelopes for ``nu = 0, 1, 2`` are built once. The bound

        min_{gamma >= 0} gamma e_bit + sum_nu q_nu Omega_h^nu(gamma) + q_tail

    is piecewise linear and convex in ``gamma``, with kinks only at the hull
    slopes of the envelopes, so it is minimised exactly by evaluating those
    kinks (and ``gamma = 0``).
    """

    def __init__(self, params: ProtocolParams, n_points: int = DEFAULT_EBIT_POINTS):
        self.params = params
        envs = [entropy_envelope(params, nu, n_points) for nu in range(MAX_BOUNDED_NU + 1)]
        kinks = np.concatenate([[0.0]] + [e.breakpoints() for e in envs])
        self.gammas = np.unique(kinks)
        self.table = np.vstack([e(self.gammas) for e in envs])

    def __call__(self, e_bit: float, alloc: Allocation) -> float:
        if not 0 <= e_bit <= 0.5:
            raise InvalidInputError("bit error rate must lie in [0, 1/2]")
        q = np.array(alloc.q[:MAX_BOUNDED_NU + 1])
        vals = self.gammas * e_bit + q @ self.table + alloc.qtail
        return float(np.clip(vals.min(), 0.0, 1.0))


def hph_bound(params: ProtocolParams, e_bit: float, alloc: Allocation,
              n_points: int = DEFAULT_EBIT_POINTS) -> float:
    return HphBound(params, n_points)(e_bit, alloc)


def rrdps_hph(card_r: int, alloc: Allocation) -> float:
    """Leaked fraction for round-robin without monitoring: ``e_ph = nu/|R|``."""
    h = sum(qn * binary_entropy(min(nu / card_r, 0.5)) for nu, qn in enumerate(alloc.q))
    return float(min(1.0, h + alloc.beyond))


def key_rate_raw(L: int, Q: float, e_bit: float, hph: float) -> float:
    """``[Q (1 - h(e_bit)) - hph] / L`` with ``hph`` in absolute units."""
    return (Q * (1 - binary_entropy(e_bit)) - hph) / L


def key_rate_G(L: int, Q: float, e_bit: float, hph: float) -> float:
    return max(0.0, key_rate_raw(L, Q, e_bit, hph))


@dataclass
class RatePoint:
    fiber_km: float
    eta: float
    mu_opt: float | None
    Q: float | None
    alloc: Allocation | None
    e_bit: float
    G_raw: float
    G: float
    L: int
    protocol: str = SNRDPS
    flags: list[str] = field(default_factory=list)

    @property
    def L_mu(self) -> float | None:
        return None if self.mu_opt is None else self.L * self.mu_opt


@dataclass(frozen=True)
class MuSearch:
    """Mean-photon-number search: log grid on ``[lo, hi]`` then refinement."""

    lo: float = 1e-7
    hi: float = 1.0
    count: int = 128


class RateModel:
    """Key rate as a function of ``mu`` and distance for one protocol setting."""

    def __init__(self, params: ProtocolParams, e_bit: float,
                 channel: ChannelModel = ChannelModel(), protocol: str = SNRDPS,
                 n_points: int = DEFAULT_EBIT_POINTS, mu_search: MuSearch = MuSearch()):
        if not 0 <= e_bit < 0.5:
            raise InvalidInputError("bit error rate must lie in [0, 1/2)")
        if protocol not in (SNRDPS, RRDPS):
            raise InvalidInputError(f"unknown protocol {protocol!r}")
        self.params, self.e_bit, self.channel = params, e_bit, channel
        self.protocol, self.mu_search = protocol, mu_search
        self._hph = HphBound(params, n_points) if protocol == SNRDPS else None
        self._n_max = params.card_r // 2 if protocol == RRDPS else MAX_BOUNDED_NU

    def evaluate(self, mu: float, eta: float):
        """Return ``(G_raw, Q, allocation)`` at mean photon number ``mu``."""
        L = self.params.L
        Q = detection_Q(L, mu, eta)
        if Q <= 0:
            return 0.0, Q, None
        alloc = eve_allocation(Q, L, mu, self._n_max)
        if self.protocol == SNRDPS:
            leak = self._hph(self.e_bit, alloc)
        else:
            leak = rrdps_hph(self.params.card_r, alloc)
        return key_rate_raw(L, Q, self.e_bit, Q * leak), Q, alloc

    def optimize_mu(self, fiber_km: float) -> RatePoint:
        eta = self.channel.eta(fiber_km)
        s = self.mu_search
        grid = np.linspace(math.log10(s.lo), math.log10(s.hi), s.count)
        log_mu, neg = minimize_on_grid(lambda lm: -self.evaluate(10 ** lm, eta)[0], grid, tol=1e-9)
        mu = 10 ** log_mu
        g_raw, Q, alloc = self.evaluate(mu, eta)
        L = self.params.L
        if g_raw <= 0:
            return RatePoint(fiber_km, eta, None, None, None, self.e_bit, g_raw, 0.0, L,
                             self.protocol, ["no-positive-rate"])
        return RatePoint(fiber_km, eta, mu, Q, alloc, self.e_bit, g_raw, g_raw, L, self.protocol)

    def scan(self, kms) -> list[RatePoint]:
        return [self.optimize_mu(float(km)) for km in kms]


def optimize_mu(params: ProtocolParams, channel: ChannelModel, fiber_km: float,
                e_bit: float) -> RatePoint:
    return RateModel(params, e_bit, channel).optimize_mu(fiber_km)


def rrdps_rate(card_r: int, e_bit: float, channel: ChannelModel, fiber_km: float) -> RatePoint:
    """Round-robin baseline with ``L = |R| + 1``."""
    return RateModel(ProtocolParams.round_robin(card_r), e_bit, channel, RRDPS).optimize_mu(fiber_km)
