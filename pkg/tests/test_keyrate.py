import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snrdps.bounds import binary_entropy
from snrdps.keyrate import (
    RRDPS,
    Allocation,
    ChannelModel,
    HphBound,
    MuSearch,
    RateModel,
    detection_Q,
    eve_allocation,
    find_nu0,
    hph_bound,
    key_rate_G,
    key_rate_raw,
    optimize_mu,
    poisson_p,
    poisson_sf,
    rrdps_hph,
    rrdps_rate,
)
from snrdps.linalg import InvalidInputError
from snrdps.povm import ProtocolParams


def test_channel():
    ch = ChannelModel()
    assert ch.eta(0) == 0.1
    assert ch.eta(50) == pytest.approx(0.01)
    with pytest.raises(InvalidInputError):
        ChannelModel(eta0=0)
    with pytest.raises(InvalidInputError):
        ch.eta(-1)


def test_poisson_examples():
    assert poisson_p(0, 1) == pytest.approx(math.exp(-1))
    assert poisson_p(1, 0) == 0
    assert poisson_p(2, 0.5) == pytest.approx(math.exp(-0.5) * 0.125)
    assert poisson_sf(-1, 0.3) == 1.0
    assert poisson_sf(1, 0.5) == pytest.approx(1 - poisson_p(0, 0.5) - poisson_p(1, 0.5))


def test_detection_examples():
    assert detection_Q(32, 0, 0.1) == 0
    assert detection_Q(10, 1, 0.1) == pytest.approx(math.exp(-1) / 2)
    assert detection_Q(32, 1e-6, 0.01) == pytest.approx(32e-8 / 2, rel=1e-6)
    xs = np.linspace(0, 20, 401)
    assert max(detection_Q(1, x, 1) for x in xs) <= 1 / (2 * math.e) + 1e-15


def test_allocation_full_detection():
    a = eve_allocation(1.0, 4, 0.25)
    assert a.nu0 == 0
    for nu in range(3):
        assert a.q[nu] == pytest.approx(poisson_p(nu, 1.0), abs=1e-15)


def test_allocation_boundary():
    mean = 0.7
    p0, p1 = poisson_p(0, mean), poisson_p(1, mean)
    Q = 1 - p0
    a = eve_allocation(Q, 7, 0.1)
    assert a.nu0 == 1
    assert a.q0 == 0
    assert a.q1 == pytest.approx(1 - (1 - p0 - p1) / Q, abs=1e-12)


def test_allocation_against_inequality_scan():
    mean, Q = 0.1, 0.001
    p = [poisson_p(n, mean) for n in range(40)]
    # independent scan of the two-sided condition with cumulative sums
    nu0 = next(n for n in range(40)
               if 1 - sum(p[:n + 1]) < Q <= 1 - sum(p[:n]))
    a = eve_allocation(Q, 10, 0.01)
    assert a.nu0 == nu0 == find_nu0(Q, mean)
    assert a.q[nu0] == pytest.approx(1 - (1 - sum(p[:nu0 + 1])) / Q, rel=1e-9)
    for nu in range(nu0 + 1, 3):
        assert a.q[nu] == pytest.approx(p[nu] / Q, rel=1e-12)
    assert all(a.q[nu] == 0 for nu in range(nu0))


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-9, 1.0), st.floats(1e-6, 5.0))
def test_allocation_feasible_and_normalised(Q_frac, mean):
    Q = Q_frac * (1 - poisson_p(0, mean)) if Q_frac < 1 else 1.0
    if Q <= 0:
        return
    a = eve_allocation(Q, 1, mean)
    total = sum(a.q) + a.beyond
    assert total == pytest.approx(1.0, abs=1e-12)
    assert a.q0 + a.q1 + a.q2 + a.qtail == pytest.approx(1.0, abs=1e-12)
    for nu, qn in enumerate(a.q):
        assert qn * Q <= poisson_p(nu, mean) * (1 + 1e-12) + 1e-300
        assert qn >= -1e-12
        if nu < a.nu0:
            assert qn == 0
        elif nu > a.nu0:
            assert qn > 0


def test_allocation_rejects_bad_Q():
    with pytest.raises(InvalidInputError):
        eve_allocation(0.0, 32, 0.01)
    with pytest.raises(InvalidInputError):
        eve_allocation(1.5, 32, 0.01)


def test_hph_trivial_examples():
    params = ProtocolParams(32, 1)
    assert hph_bound(params, 0.0, Allocation((0.0, 1.0, 0.0), 0.0, 1)) == pytest.approx(0.0, abs=1e-12)
    assert hph_bound(params, 0.1, Allocation((0.0, 0.0, 0.0), 1.0, 3)) == 1.0


def test_hph_against_random_gamma_oracle():
    params = ProtocolParams(32, 1)
    bound = HphBound(params)
    L, eta = 32, ChannelModel().eta(100)
    mu = 0.3 / L
    alloc = eve_allocation(detection_Q(L, mu, eta), L, mu)
    envs = _envelopes(params)
    rng = np.random.default_rng(7)
    gammas = np.concatenate([[0.0], rng.exponential(5.0, size=10_000)])
    q = np.array(alloc.q[:3])
    direct = gammas * 0.02 + sum(q[nu] * envs[nu](gammas) for nu in range(3)) + alloc.qtail
    exact = bound(0.02, alloc)
    # the exact minimum is never above a sampled one, and sampling gets close
    assert exact <= direct.min() + 1e-12
    assert direct.min() - exact < 1e-3


def _envelopes(params):
    from snrdps.bounds import entropy_envelope
    return [entropy_envelope(params, nu) for nu in range(3)]


def test_key_rate_examples():
    assert key_rate_G(32, 0.1, 0.0, 0.0) == pytest.approx(0.003125)
    expected = (0.1 * (1 - binary_entropy(0.02)) - 0.01) / 32
    assert key_rate_G(32, 0.1, 0.02, 0.01) == pytest.approx(expected)
    assert key_rate_G(32, 0.1, 0.02, 0.1) == 0.0
    assert key_rate_raw(32, 0.1, 0.02, 0.1) < 0


def test_optimize_mu_at_100km():
    pt = optimize_mu(ProtocolParams(32, 5), ChannelModel(), 100.0, 0.02)
    assert pt.G > 0
    assert 1e-7 <= pt.mu_opt <= 1
    assert pt.alloc.q0 + pt.alloc.q1 + pt.alloc.q2 + pt.alloc.qtail == pytest.approx(1, abs=1e-12)
    assert 0 <= pt.Q <= 1


def test_optimize_mu_absent_without_rate():
    # a bit error rate this high leaves nothing after error correction
    pt = optimize_mu(ProtocolParams(32, 1), ChannelModel(), 10.0, 0.3)
    assert pt.G == 0.0
    assert pt.mu_opt is None and pt.L_mu is None
    assert "no-positive-rate" in pt.flags


def test_rrdps_leak_and_cap():
    a = Allocation((0.0, 0.5, 0.3, 0.2), 0.0, 1)
    expected = 0.5 * binary_entropy(0.25) + 0.3 * binary_entropy(0.5) + 0.2
    assert rrdps_hph(4, a) == pytest.approx(expected)
    assert rrdps_hph(2, Allocation((0.0, 0.0, 1.0), 0.0, 2)) == 1.0


def test_rrdps_short_block_gives_no_rate():
    model = RateModel(ProtocolParams.round_robin(4), 0.05, protocol=RRDPS)
    assert all(p.G == 0 for p in model.scan(np.arange(0, 201, 10.0)))


def test_rrdps_positive_at_mid_distance():
    assert rrdps_rate(10, 0.02, ChannelModel(), 50.0).G > 0


def test_rate_nonincreasing_in_distance():
    pts = RateModel(ProtocolParams(32, 2), 0.02).scan(np.arange(0, 201, 1.0))
    g = np.array([p.G for p in pts])
    assert np.all(np.diff(g) <= 1e-15 * g[:-1].max())


@pytest.mark.parametrize("card", [2, 4, 6, 8, 10])
def test_zero_error_short_distance(card):
    assert optimize_mu(ProtocolParams(32, card // 2), ChannelModel(), 5.0, 0.0).G > 0


def test_grid_halving_changes_rate_little():
    params = ProtocolParams(32, 5)
    coarse = RateModel(params, 0.02)
    fine = RateModel(params, 0.02, n_points=800, mu_search=MuSearch(count=256))
    for km in (20.0, 100.0, 180.0):
        a, b = coarse.optimize_mu(km).G, fine.optimize_mu(km).G
        assert abs(a - b) / b < 0.01
