"""Measurement operators on Bob's single-photon space and the error operators.

Indices follow the physics convention: pulses are numbered ``1..L`` in every
public function, and matrices are indexed ``0..L-1`` internally. All
operators built here are real symmetric; where a complex density operator
is supplied the probabilities are computed as ``Re tr(rho M)``.

The full register-plus-photon space (dimension ``2**L * L``) is only built
for small ``L`` and only for cross-checking the reduced forms. Its basis
ordering is ``|a_1 ... a_L>_A |k>_B`` with ``a_1`` the most significant bit
and combined index ``int(a) * L + (k - 1)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from snrdps.linalg import InvalidInputError

FULLSPACE_MAX_L = 6

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class ProtocolParams:
    """Block length ``L`` and half-delay count ``t`` of the protocol.

    The delay set is ``R = {1..t} | {L-t..L-1}``, closed under ``r -> L - r``.
    Taking ``L = 2t + 1`` gives every delay ``1..L-1``, i.e. the round-robin
    protocol; see :meth:`round_robin`.
    """

    L: int
    t: int

    def __post_init__(self):
        if int(self.L) != self.L or int(self.t) != self.t:
            raise InvalidInputError("L and t must be integers")
        if self.L < 3:
            raise InvalidInputError(f"block length must be >= 3, got L={self.L}")
        if not 0 < self.t < self.L / 2:
            raise InvalidInputError(f"need 0 < t < L/2, got t={self.t}, L={self.L}")

    @classmethod
    def round_robin(cls, card_r: int) -> "ProtocolParams":
        """Round-robin variant with ``|R| = card_r`` delays and ``L = |R| + 1``."""
        if card_r < 2 or card_r % 2:
            raise InvalidInputError("round-robin |R| must be an even integer >= 2")
        return cls(L=card_r + 1, t=card_r // 2)

    @cached_property
    def delays(self) -> tuple[int, ...]:
        return tuple(sorted({m for m in range(1, self.t + 1)}
                            | {self.L - m for m in range(1, self.t + 1)}))

    @property
    def card_r(self) -> int:
        return 2 * self.t

    def __str__(self):
        return f"(L={self.L}, |R|={self.card_r})"


def _check_delay(params: ProtocolParams, r: int):
    if r not in params.delays:
        raise InvalidInputError(f"delay {r} is not in R={params.delays}")


def _check_bit(s: int):
    if s not in (0, 1):
        raise InvalidInputError(f"bit value must be 0 or 1, got {s}")


def mod_sum(p: int, q: int, L: int) -> int:
    """``p +_L q`` on the index range ``1..L``."""
    if not (1 <= p <= L and 1 <= q <= L):
        raise InvalidInputError(f"indices must lie in [1, {L}], got ({p}, {q})")
    return p + q if p + q <= L else p + q - L


def _pair_projector(L: int, k: int, other: int, s: int) -> np.ndarray:
    """``(1/2) P((|k> + (-1)^s |other>) / sqrt 2)`` as an L x L matrix."""
    v = np.zeros(L)
    v[k - 1] = 1.0
    v[other - 1] = (-1.0) ** s
    return 0.25 * np.outer(v, v)


def actual_povm(params: ProtocolParams, r: int, k: int, s: int) -> np.ndarray:
    """POVM element of the real interferometer with delay ``r``.

    Outcome ``s`` on the pulse pair ``(k, k + r)``. Pairs that the delay
    cannot form (``k < 1`` or ``k > L - r``) give the zero operator, which
    is what the decomposition identities need.
    """
    _check_delay(params, r)
    _check_bit(s)
    L = params.L
    if k < 1 or k > L - r:
        return np.zeros((L, L))
    return _pair_projector(L, k, k + r, s)


def dial_povm(params: ProtocolParams, r: int, k: int, s: int) -> np.ndarray:
    """POVM element of the cyclic (dial) measurement, pair ``(k, k +_L r)``."""
    _check_delay(params, r)
    _check_bit(s)
    L = params.L
    if not 1 <= k <= L:
        raise InvalidInputError(f"pulse index must lie in [1, {L}], got {k}")
    return _pair_projector(L, k, mod_sum(k, r, L), s)


def _check_pair(params, i, j):
    if not 1 <= i < j <= params.L:
        raise InvalidInputError(f"need 1 <= i < j <= L, got ({i}, {j})")


def prob_dial(rho, params: ProtocolParams, r: int, s: int, pair) -> float:
    """Probability of bit ``s`` announced on ``pair`` under the dial measurement."""
    i, j = pair
    _check_pair(params, i, j)
    rho = np.asarray(rho)
    p = 0.0
    if j - i == r:
        p += _expect(rho, dial_povm(params, r, i, s))
    if j - i == params.L - r:
        p += _expect(rho, dial_povm(params, r, j, s))
    return p


def prob_actual_mixed(rho, params: ProtocolParams, r: int, s: int, pair,
                      weights=(0.5, 0.5)) -> float:
    """Same event under the real setup with delays ``r`` and ``L - r``.

    ``weights`` are the probabilities of choosing ``r`` and ``L - r``; the
    protocol uses the uniform choice. Other values exist for negative
    controls.
    """
    i, j = pair
    _check_pair(params, i, j)
    _check_delay(params, r)
    rho = np.asarray(rho)
    w_r, w_rbar = weights
    r_bar = params.L - r
    p = 0.0
    if j - i == r:
        p += w_r * _expect(rho, actual_povm(params, r, i, s))
    if j - i == r_bar:
        p += w_rbar * _expect(rho, actual_povm(params, r_bar, i, s))
    return p


def _expect(rho, op) -> float:
    return float(np.real(np.trace(rho @ op)))


def pi_bit_from_delays(L: int, delays) -> np.ndarray:
    """Reduced bit-error operator for an arbitrary symmetric delay set.

    The ``|m - n| == L/2`` branch only occurs when ``L/2`` is a delay,
    which never happens for the protocol's own delay sets.
    """
    card = len(delays)
    idx = np.arange(L)
    d = np.abs(idx[:, None] - idx[None, :])
    hit = np.isin(d, list(delays))
    m = np.where(hit, np.where(2 * d == L, -1.0 / card, -0.5 / card), 0.0)
    m[idx, idx] = 0.5
    return m


@lru_cache(maxsize=128)
def _pi_bit_cached(params: ProtocolParams) -> np.ndarray:
    m = pi_bit_from_delays(params.L, params.delays)
    m.flags.writeable = False
    return m


def pi_bit(params: ProtocolParams) -> np.ndarray:
    return _pi_bit_cached(params)


def as_occupation(a, L: int | None = None) -> np.ndarray:
    """Validate a 0/1 occupation pattern and return it as an int array."""
    bits = np.array([int(x) for x in a], dtype=int)
    if np.any((bits != 0) & (bits != 1)):
        raise InvalidInputError(f"occupation pattern must be 0/1, got {a!r}")
    if L is not None and len(bits) != L:
        raise InvalidInputError(f"occupation pattern must have length {L}")
    return bits


def neighbour_mask(params: ProtocolParams) -> np.ndarray:
    """Boolean L x L matrix, true where ``|m - n|`` is a delay."""
    idx = np.arange(params.L)
    diff = np.abs(idx[:, None] - idx[None, :])
    return np.isin(diff, params.delays)


def pi_phase(params: ProtocolParams, a) -> np.ndarray:
    """Diagonal phase-error operator for register pattern ``a``."""
    bits = as_occupation(a, params.L)
    counts = neighbour_mask(params).astype(float) @ bits
    return np.diag(0.5 * bits + counts / (2.0 * params.card_r))


def band_matrix(k: int, n: int) -> np.ndarray:
    """Cyclic band 0/1 matrix: 1 where ``1 <= |l-m| <= k`` or ``|l-m| >= n-k``."""
    if not 1 <= k < n:
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :])
    return (((d >= 1) & (d <= k)) | ((d >= n - k) & (d <= n - 1))).astype(float)


def occupation_projector(a) -> np.ndarray:
    return np.diag(as_occupation(a).astype(float))


def cyclic_shift(L: int, kappa: int) -> np.ndarray:
    """Permutation matrix sending ``|m>`` to ``|m +_L kappa>``."""
    v = np.zeros((L, L))
    for m in range(1, L + 1):
        v[mod_sum(m, kappa, L) - 1, m - 1] = 1.0
    return v


def consecutive_occupation(L: int, weight: int, start: int = 1) -> np.ndarray:
    """Pattern with ``weight`` consecutive ones beginning at pulse ``start``."""
    if not 0 <= weight <= L:
        raise InvalidInputError(f"weight must lie in [0, {L}]")
    a = np.zeros(L, dtype=int)
    a[start - 1:start - 1 + weight] = 1
    return a


def occupations_of_weight(L: int, weight: int):
    """Iterate over every length-``L`` 0/1 pattern with ``weight`` ones."""
    for ones in itertools.combinations(range(L), weight):
        a = np.zeros(L, dtype=int)
        a[list(ones)] = 1
        yield a


# -- full register + photon space (verification only) ----------------------

def filter_op(params: ProtocolParams, r: int, k: int) -> np.ndarray:
    """Bob's filter ``B -> Bq`` for outcome ``k`` and delay ``r`` (2 x L)."""
    L = params.L
    f = np.zeros((2, L))
    h1, h0 = _H[:, 1], _H[:, 0]
    if 1 <= k <= L - r:
        first, second = k, k + r
    elif L - r + 1 <= k <= L:
        first, second = k + r - L, k
    else:
        raise InvalidInputError(f"pulse index must lie in [1, {L}]")
    f[:, first - 1] += h1 / np.sqrt(2.0)
    f[:, second - 1] += h0 / np.sqrt(2.0)
    return f


def _alice_measurements() -> list[np.ndarray]:
    """Alice's three Kraus maps from qubits (i, j) to Aq, as 2 x 4 matrices.

    Two-qubit basis order is ``|00>, |01>, |10>, |11>`` with qubit ``i``
    first.
    """
    ket = np.eye(4)
    m1 = np.outer(_H[:, 0], ket[1]) + np.outer(_H[:, 1], ket[2])
    m2 = np.outer([1.0, 0.0], ket[0] + ket[3]) / np.sqrt(2.0)
    m3 = np.outer([0.0, 1.0], ket[0] - ket[3]) / np.sqrt(2.0)
    return [m1, m2, m3]


def _embed_single(L: int, i: int, op: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1))
    for q in range(1, L + 1):
        out = np.kron(out, op if q == i else np.eye(2))
    return out


def _embed_pair(L: int, i: int, j: int, op4: np.ndarray) -> np.ndarray:
    """Embed a 4 x 4 operator on qubits ``(i, j)`` into the L-qubit register."""
    out = np.zeros((2 ** L, 2 ** L))
    units = [np.outer(np.eye(2)[x], np.eye(2)[y]) for x in range(2) for y in range(2)]
    for ai, ci, aj, cj in itertools.product(range(2), repeat=4):
        coeff = op4[2 * ai + aj, 2 * ci + cj]
        if coeff == 0:
            continue
        factors = []
        for q in range(1, L + 1):
            if q == i:
                factors.append(units[2 * ai + ci])
            elif q == j:
                factors.append(units[2 * aj + cj])
            else:
                factors.append(np.eye(2))
        term = np.ones((1, 1))
        for f in factors:
            term = np.kron(term, f)
        out += coeff * term
    return out


def _delay_pairs(params: ProtocolParams):
    return [(i, j) for i in range(1, params.L + 1) for j in range(i + 1, params.L + 1)
            if j - i in params.delays]


@dataclass(frozen=True)
class FullSpaceOps:
    e_bit: np.ndarray
    e_phase: np.ndarray
    unitary: np.ndarray


def build_fullspace_error_ops(params: ProtocolParams,
                              drop_wrap_branch: bool = False) -> FullSpaceOps:
    """Summed bit/phase error operators and the register-flip unitary.

    Built directly from Alice's Kraus maps, Bob's filters and the dial
    POVM, with no use of the reduced forms. ``drop_wrap_branch`` removes the
    wrap-around term of the bit-error operator (negative control).
    """
    L = params.L
    if L > FULLSPACE_MAX_L:
        raise InvalidInputError(f"full-space construction is limited to L <= {FULLSPACE_MAX_L}")
    card = params.card_r
    dim_a = 2 ** L
    e_bit = np.zeros((dim_a * L, dim_a * L))
    e_phase = np.zeros_like(e_bit)
    hadamard_proj = [np.outer(_H[:, s], _H[:, s]) for s in range(2)]
    kraus = _alice_measurements()

    for i, j in _delay_pairs(params):
        # bit error
        for si, sj in itertools.product(range(2), repeat=2):
            a_part = _embed_single(L, i, hadamard_proj[si]) @ _embed_single(L, j, hadamard_proj[sj])
            s_flip = si ^ sj ^ 1
            b_part = np.zeros((L, L))
            for r in params.delays:
                if j == i + r:
                    b_part += dial_povm(params, r, i, s_flip)
                if i == j + r - L and not drop_wrap_branch:
                    b_part += dial_povm(params, r, j, s_flip)
            e_bit += np.kron(a_part, b_part / card)
        # phase error
        for s in range(2):
            a4 = sum(m.T @ hadamard_proj[s] @ m for m in kraus)
            a_part = _embed_pair(L, i, j, a4)
            b_part = np.zeros((L, L))
            for r in params.delays:
                if j == i + r:
                    f = filter_op(params, r, i)
                    b_part += f.T @ hadamard_proj[s ^ 1] @ f
                if i == j + r - L:
                    f = filter_op(params, r, j)
                    b_part += f.T @ hadamard_proj[s ^ 1] @ f
            e_phase += np.kron(a_part, b_part / card)

    u = np.zeros_like(e_bit)
    for k in range(1, L + 1):
        pk = np.zeros((L, L))
        pk[k - 1, k - 1] = 1.0
        u += np.kron(_embed_single(L, k, _X), pk)
    return FullSpaceOps(e_bit=e_bit, e_phase=e_phase, unitary=u)


def reduced_bit_target(params: ProtocolParams) -> np.ndarray:
    """``1_A (x) Pi_bit`` on the full space."""
    return np.kron(np.eye(2 ** params.L), pi_bit(params))


def reduced_phase_target(params: ProtocolParams) -> np.ndarray:
    """Block-diagonal ``sum_a P(|a>) (x) Pi_phase(a)`` on the full space."""
    L = params.L
    out = np.zeros((2 ** L * L, 2 ** L * L))
    for idx in range(2 ** L):
        a = [(idx >> (L - 1 - q)) & 1 for q in range(L)]
        out[idx * L:(idx + 1) * L, idx * L:(idx + 1) * L] = pi_phase(params, a)
    return out
