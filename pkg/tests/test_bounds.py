import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import entropy

from snrdps.bounds import (
    MINUS,
    PLUS,
    BranchBound,
    LambdaGrid,
    binary_entropy,
    bound_curve,
    eph_bound,
    eph_branch_bound,
    entropy_envelope,
    omega,
    omega_h,
    omega_minus,
    omega_minus_nu2_matrix,
    omega_ordering_violations,
    omega_plus_analytic,
    omega_plus_numeric,
    restricted_plus_matrix,
    theorem1_bound,
)
from snrdps.linalg import InvalidInputError, largest_eigenvalue
from snrdps.povm import ProtocolParams

CARDS = (2, 4, 6, 8, 10)


def p32(card):
    return ProtocolParams(32, card // 2)


def test_binary_entropy_values():
    assert binary_entropy(0) == 0
    assert binary_entropy(1) == 0
    assert binary_entropy(0.5) == 1
    # independent oracle: Shannon entropy in bits
    assert binary_entropy(0.11) == pytest.approx(entropy([0.11, 0.89], base=2), abs=1e-14)
    assert binary_entropy(0.11) == pytest.approx(0.4999159581645, abs=1e-12)
    with pytest.raises(InvalidInputError):
        binary_entropy(1.5)


def test_omega_plus_analytic_examples():
    assert omega_plus_analytic(1, 4, 0) == pytest.approx(0.625)
    assert omega_plus_analytic(0, 2, 1) == 0
    assert omega_plus_analytic(1, 2, 1) == pytest.approx(0.5)
    with pytest.raises(InvalidInputError):
        omega_plus_analytic(2, 2, 1.0)


@pytest.mark.parametrize("card", CARDS)
@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0, 2.0, 10.0])
def test_numeric_plus_matches_closed_form(card, lam):
    params = p32(card)
    for nu in range(card // 2 + 1):
        assert omega_plus_numeric(params, nu, lam) == pytest.approx(
            omega_plus_analytic(nu, card, lam), abs=1e-10)


def test_two_photon_plus_matrix_worked_example():
    params = ProtocolParams(32, 1)
    for lam in (0.0, 0.3, 1.7):
        base = (1 - lam) / 2
        expected = (np.diag([base + 0.25, base + 0.5, base + 0.25])
                    + lam / 4 * (np.eye(3, k=1) + np.eye(3, k=-1)))
        a = [1, 1, 1] + [0] * 29
        assert np.abs(restricted_plus_matrix(params, a, lam) - expected).max() < 1e-15
        assert omega_plus_numeric(params, 2, lam) == pytest.approx(
            largest_eigenvalue(expected), abs=1e-12)


def test_omega_minus_examples():
    for params in (ProtocolParams(32, 1), ProtocolParams(11, 5), ProtocolParams(5, 2)):
        assert omega_minus(params, 1, 2.0) == pytest.approx(0.0, abs=1e-14)
        assert omega_minus(params, 2, 0.0) == pytest.approx(0.5)
    with pytest.raises(InvalidInputError):
        omega_minus(ProtocolParams(32, 1), 3, 1.0)


@pytest.mark.parametrize("card", CARDS)
def test_explicit_two_photon_matrix_agrees(card):
    params = p32(card)
    for lam in (0.0, 0.4, 1.0, 5.0):
        assert omega_minus(params, 2, lam) == pytest.approx(
            largest_eigenvalue(omega_minus_nu2_matrix(params, lam)), abs=1e-12)


def test_omega_pessimistic_for_many_photons():
    assert omega(ProtocolParams(32, 2), 3, 0.7) == 1.0


@pytest.mark.parametrize("card", CARDS)
def test_omega_ordering_in_nu(card):
    assert omega_ordering_violations(p32(card), LambdaGrid(count=128)) == []


def test_branch_bound_closed_form_examples():
    params = ProtocolParams(32, 1)
    assert eph_branch_bound(params, 1, PLUS, 0.2) == 0.0
    assert eph_branch_bound(params, 1, PLUS, 0.3) == pytest.approx(0.75)
    with pytest.raises(InvalidInputError):
        eph_branch_bound(params, 1, PLUS, 0.7)


def test_branch_bound_numeric_matches_closed_form():
    params = ProtocolParams(32, 1)
    num = BranchBound(params, 1, PLUS, force_numeric=True)
    for x in (0.1, 0.249, 0.25, 0.3, 0.5):
        assert num(x) == pytest.approx(eph_branch_bound(params, 1, PLUS, x), abs=1e-6)


def test_minus_branch_at_origin_against_finer_grid():
    params = ProtocolParams(32, 5)
    coarse = BranchBound(params, 2, MINUS)(0.0)
    fine = BranchBound(params, 2, MINUS, LambdaGrid(count=5120))(0.0)
    assert coarse == pytest.approx(fine, abs=1e-6)
    # the uniform vector is annihilated by the bit operator, so the floor is 1/L
    assert coarse >= 1 / 32 - 1e-12


def test_eph_bound_single_photon_examples():
    params = ProtocolParams(32, 1)
    assert eph_bound(params, 1, 0.1) == pytest.approx(0.3, abs=1e-12)
    assert eph_bound(params, 1, 0.0) == 0.0
    assert eph_bound(ProtocolParams(32, 5), 1, 0.45) == pytest.approx(0.55, abs=1e-12)
    assert eph_bound(params, 3, 0.1) == 0.5


@pytest.mark.parametrize("card", CARDS)
def test_single_photon_curve_is_closed_form(card):
    xs = np.linspace(0, 0.5, 200)
    assert np.abs(bound_curve(p32(card), 1)(xs) - theorem1_bound(card, xs)).max() < 1e-12


def test_vacuum_bound():
    params = ProtocolParams(32, 2)
    assert eph_bound(params, 0, 0.0) == 0.0
    assert eph_bound(params, 0, 0.4999) == 0.0
    assert eph_bound(params, 0, 0.5) == 0.5


@pytest.mark.parametrize("card", CARDS)
def test_two_photon_curve_monotone_and_concave(card):
    curve = bound_curve(p32(card), 2)
    ys = curve.values
    assert np.all(np.diff(ys) >= -1e-12)
    assert curve.curve.is_concave(tol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CARDS), st.floats(0, 1), st.floats(0, 0.5), st.floats(0, 0.5))
def test_two_photon_envelope_dominates_mixtures(card, p, x_plus, x_minus):
    params = p32(card)
    e_bit = p * x_plus + (1 - p) * x_minus
    mix = (p * BranchBound(params, 2, PLUS)(x_plus)
           + (1 - p) * BranchBound(params, 2, MINUS)(x_minus))
    assert mix <= eph_bound(params, 2, e_bit) + 1e-9


def test_bounds_nonincreasing_in_card_r():
    xs = np.linspace(0, 0.2, 81)
    for nu in (1, 2):
        curves = [np.asarray(bound_curve(p32(c), nu)(xs)) for c in CARDS]
        for lo, hi in zip(curves[1:], curves[:-1]):
            assert np.all(lo <= hi + 1e-12)


def test_omega_h_examples():
    params = ProtocolParams(32, 1)
    assert omega_h(params, 3, 0.0) == 1.0
    assert omega_h(params, 3, 7.0) == 1.0
    assert omega_h(params, 1, 1e6) == pytest.approx(0.0, abs=1e-12)
    # vacuum: the bit error rate 1/2 still carries a full bit
    assert omega_h(params, 0, 0.0) == 1.0
    assert omega_h(params, 0, 1.0) == pytest.approx(0.5)
    with pytest.raises(InvalidInputError):
        omega_h(params, 1, -1.0)


@pytest.mark.parametrize("nu", [0, 1, 2])
def test_omega_h_supports_entropy_curve(nu):
    params = ProtocolParams(32, 3)
    curve = bound_curve(params, nu)
    hx = binary_entropy(np.minimum(curve.values, 0.5))
    gammas = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 40)])
    env = entropy_envelope(params, nu)
    vals = env(gammas)
    assert np.all(np.diff(vals) <= 1e-12)
    for g, v in zip(gammas, vals):
        assert np.all(hx <= g * curve.xs + v + 1e-12)


def test_entropy_envelope_breakpoints_are_kinks():
    env = entropy_envelope(ProtocolParams(32, 1), 1)
    bps = env.breakpoints()
    assert np.all(bps >= 0)
    # between kinks the envelope is affine in gamma
    g = np.sort(bps)
    for lo, hi in zip(g[:-1], g[1:]):
        mid = (lo + hi) / 2
        assert env(mid) == pytest.approx((env(lo) + env(hi)) / 2, abs=1e-12)


def test_theorem1_formula_values():
    assert theorem1_bound(2, 0.1) == pytest.approx(0.3)
    assert theorem1_bound(10, 0.05) == pytest.approx(11 / 9 * 0.05)
    assert theorem1_bound(10, 0.05) == pytest.approx(0.0611, abs=1e-4)
    assert theorem1_bound(10, 0.49) == pytest.approx(0.55)
    assert math.isclose(float(theorem1_bound(4, 0.375)), 5 / 3 * 0.375)
