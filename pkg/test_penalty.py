import numpy as np
import pytest

from billiards.geometry import ball
from billiards.penalty import (
    PenaltyParams,
    U_delta,
    barrier_terms,
    grad_U,
    h_delta,
    hess_U,
    penalty_params_for,
    rho,
    rho_d1,
    rho_d2,
)
from errors import DomainViolation, InvalidArgument, OverflowGuard

DISC = ball([0.0, 0.0], 1.0)
DELTA = 0.1


def test_cutoff_pieces():
    """ρ 는 [0,1] 항등, [3,∞) 에서 2, 사이에서 단조 C² 보간."""
    assert rho(0.5) == pytest.approx(0.5)
    assert rho(1.0) == pytest.approx(1.0)
    assert rho(3.0) == pytest.approx(2.0)
    assert rho(7.0) == pytest.approx(2.0)
    assert rho_d1(0.5) == pytest.approx(1.0)
    assert rho_d1(2.0) == pytest.approx(0.5)
    assert rho_d1(4.0) == pytest.approx(0.0)
    for knot in (1.0, 3.0):
        assert rho(knot - 1e-9) == pytest.approx(rho(knot + 1e-9), abs=1e-8)
        assert rho_d1(knot - 1e-9) == pytest.approx(rho_d1(knot + 1e-9), abs=1e-8)
        assert rho_d2(knot - 1e-9) == pytest.approx(rho_d2(knot + 1e-9), abs=1e-7)

    t = np.linspace(0.0, 5.0, 501)
    d1 = rho_d1(t)
    assert np.all(d1 >= -1e-15) and np.all(d1 <= 1.0 + 1e-15)


def test_cutoff_rejects_negative_argument():
    with pytest.raises(InvalidArgument):
        rho(-0.1)


def test_barrier_values():
    # d = δ/2 → U = (δ/2)⁻² − (2δ)⁻² = 15/(4δ²)
    q = [1.0 - DELTA / 2.0, 0.0]
    assert h_delta(DISC, DELTA, q) == pytest.approx(DELTA / 2.0, rel=1e-12)
    assert U_delta(DISC, DELTA, q) == pytest.approx(15.0 / (4.0 * DELTA**2), rel=1e-10)
    assert U_delta(DISC, DELTA, [0.0, 0.0]) == 0.0
    np.testing.assert_allclose(grad_U(DISC, DELTA, [0.5, 0.0]), 0.0)


def test_barrier_outside_and_underflow():
    with pytest.raises(DomainViolation):
        barrier_terms(DISC, DELTA, [[0.0, 0.0], [1.5, 0.0]])
    with pytest.raises(OverflowGuard) as info:
        barrier_terms(DISC, DELTA, [1.0 - 1e-14, 0.0])
    assert info.value.details["distance"] < 1e-12


def test_grad_U_matches_finite_difference():
    q = np.array([0.84, 0.05])
    step = 1e-6
    fd = np.array([
        (U_delta(DISC, DELTA, q + step * e) - U_delta(DISC, DELTA, q - step * e)) / (2 * step)
        for e in np.eye(2)
    ])
    np.testing.assert_allclose(grad_U(DISC, DELTA, q), fd, rtol=1e-5)


def test_hess_U_matches_finite_difference():
    q = np.array([0.78, 0.12])
    step = 1e-6
    fd = np.column_stack([
        (grad_U(DISC, DELTA, q + step * e) - grad_U(DISC, DELTA, q - step * e)) / (2 * step)
        for e in np.eye(2)
    ])
    H = hess_U(DISC, DELTA, q)
    np.testing.assert_allclose(H, H.T, atol=1e-8)
    np.testing.assert_allclose(H, fd, rtol=1e-4, atol=1e-4)


def test_penalty_params():
    params = penalty_params_for(DISC, 0.05)
    assert params.delta == pytest.approx(0.1, rel=1e-6)
    assert params.with_epsilon(0.01).epsilon == 0.01
    with pytest.raises(InvalidArgument):
        penalty_params_for(DISC, 0.05, delta=0.5)
    with pytest.raises(InvalidArgument):
        PenaltyParams(delta=0.0, epsilon=0.1)
