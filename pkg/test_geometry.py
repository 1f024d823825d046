"""
볼록체 지지함수, 부호 거리, 폭과 내접 반지름 테스트
"""
import math

import numpy as np
import pytest

from billiards.geometry import (
    ball,
    boundary_normal,
    distance_hessian,
    distance_to_boundary,
    dominates,
    ellipsoid,
    inradius,
    minkowski_sum,
    p_ball,
    ray_exit_length,
    scaled,
    signed_distance_many,
    sphere_grid,
    support,
    support_point,
    support_values,
    translated,
    width,
)
from errors import InvalidArgument
from resources.body_zoo import ZOO

DISC = ball([0.0, 0.0], 1.0)
ELLIPSE = ellipsoid([0.0, 0.0], [2.0, 1.0])
PBALL = p_ball([0.0, 0.0], [1.0, 1.0], 4)


def test_support_of_basic_bodies():
    assert support(DISC, [1.0, 0.0]) == pytest.approx(1.0)
    assert support(ELLIPSE, [1.0, 0.0]) == pytest.approx(2.0)
    assert support(ELLIPSE, [0.0, 1.0]) == pytest.approx(1.0)
    diagonal = np.array([1.0, 1.0]) / math.sqrt(2.0)
    assert support(PBALL, diagonal) == pytest.approx(2.0**0.25, rel=1e-12)


def test_support_point_lies_on_boundary():
    """∇h(u) 는 외법선이 u 인 경계점입니다."""
    np.testing.assert_allclose(support_point(PBALL, [1.0, 0.0]), [1.0, 0.0], atol=1e-12)
    for theta in np.linspace(0.1, 6.0, 7):
        u = np.array([math.cos(theta), math.sin(theta)])
        p = support_point(ELLIPSE, u)
        assert (p[0] / 2.0) ** 2 + p[1] ** 2 == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(boundary_normal(ELLIPSE, p), u, atol=1e-9)


def test_minkowski_sum_adds_supports():
    body = minkowski_sum(ELLIPSE, DISC)
    assert support(body, [1.0, 0.0]) == pytest.approx(3.0)
    assert support(body, [0.0, -1.0]) == pytest.approx(2.0)
    assert width(body).width == pytest.approx(4.0, abs=1e-9)


def test_degenerate_and_mismatched_bodies_are_rejected():
    with pytest.raises(InvalidArgument):
        ball([0.0, 0.0], 0.0)
    with pytest.raises(InvalidArgument):
        minkowski_sum(DISC, ball([0.0, 0.0, 0.0], 1.0))
    with pytest.raises(InvalidArgument):
        p_ball([0.0, 0.0], [1.0, 1.0], 3)
    with pytest.raises(InvalidArgument):
        support(DISC, [0.0, 0.0])


def test_signed_distance_inside_and_outside():
    assert distance_to_boundary(DISC, [0.5, 0.0]) == pytest.approx(0.5, abs=1e-14)
    assert distance_to_boundary(DISC, [2.0, 0.0]) == pytest.approx(-1.0, abs=1e-14)
    assert distance_to_boundary(ELLIPSE, [0.0, 0.0]) == pytest.approx(1.0, abs=1e-12)


def test_signed_distance_in_three_dimensions():
    body = ball([0.0, 0.0, 0.0], 1.0)
    assert distance_to_boundary(body, [0.0, 0.0, 0.5]) == pytest.approx(0.5, abs=1e-8)


def test_distance_hessian_analytic_matches_finite_difference():
    h = distance_hessian(DISC, [0.5, 0.0])
    np.testing.assert_allclose(h, [[0.0, 0.0], [0.0, -2.0]], atol=1e-10)

    q = [0.3, 0.2]
    analytic = distance_hessian(ELLIPSE, q)
    fd = distance_hessian(ELLIPSE, q, method="fd")
    np.testing.assert_allclose(analytic, fd, atol=1e-5)


def test_width_and_inradius():
    assert width(ELLIPSE).width == pytest.approx(2.0, abs=1e-10)
    assert abs(width(ELLIPSE).direction[1]) == pytest.approx(1.0, abs=1e-6)
    assert width(PBALL).width == pytest.approx(2.0, abs=1e-9)
    assert inradius(ELLIPSE).radius == pytest.approx(1.0, abs=1e-6)
    report = inradius(ball([1.0, -1.0], 2.0))
    assert report.radius == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(report.center, [1.0, -1.0], atol=1e-5)


def test_ray_exit_length():
    assert ray_exit_length(DISC, [0.0, 0.0], [1.0, 0.0]) == pytest.approx(1.0, abs=1e-12)
    assert ray_exit_length(DISC, [0.5, 0.0], [1.0, 0.0]) == pytest.approx(0.5, abs=1e-12)
    assert ray_exit_length(ELLIPSE, [0.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=1e-12)


def test_scaled_translated_and_dominates():
    big = scaled(DISC, 2.0)
    assert support(big, [1.0, 0.0]) == pytest.approx(2.0)
    moved = translated(DISC, [1.0, 0.0])
    assert support(moved, [1.0, 0.0]) == pytest.approx(2.0)
    assert dominates(DISC, big)
    assert not dominates(big, DISC)
    assert dominates(DISC, PBALL)


def test_sphere_grid_is_unit():
    for dim in (2, 3, 4):
        U = sphere_grid(dim, 50)
        np.testing.assert_allclose(np.linalg.norm(U, axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize(
    "body, p",
    [
        (DISC, [1.0, 0.0]), (DISC, [0.0, -1.0]),
        (ELLIPSE, [2.0, 0.0]), (ELLIPSE, [0.0, 1.0]), (ELLIPSE, [-2.0, 0.0]),
        (PBALL, [-1.0, 0.0]), (PBALL, [0.0, 1.0]),
    ],
)
def test_axis_boundary_points(body, p):
    """격자 각도와 정확히 겹치는 법선에서도 거리 0, 축 방향 법선."""
    p = np.asarray(p)
    assert distance_to_boundary(body, p) == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(boundary_normal(body, p), p / np.linalg.norm(p), atol=1e-9)


def test_signed_distance_at_axis_interior_points():
    assert distance_to_boundary(PBALL, [0.5, 0.0]) == pytest.approx(0.5, abs=1e-12)
    assert distance_to_boundary(PBALL, [0.0, -0.25]) == pytest.approx(0.75, abs=1e-12)
    assert distance_to_boundary(ELLIPSE, [0.0, 0.5]) == pytest.approx(0.5, abs=1e-12)
    assert distance_to_boundary(DISC, [0.0, 0.0]) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("body", [DISC, ELLIPSE, PBALL], ids=["disc", "ellipse", "pball"])
def test_ray_exit_along_coordinate_axes(body):
    for v in ([1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]):
        t = ray_exit_length(body, [0.0, 0.0], v)
        assert t == pytest.approx(support(body, v), abs=1e-12)


def test_ray_exit_from_offset_point_and_unnormalized_direction():
    assert ray_exit_length(ELLIPSE, [0.5, 0.0], [1.0, 0.0]) == pytest.approx(1.5, abs=1e-12)
    # t 는 q + t·v 의 매개변수
    assert ray_exit_length(DISC, [0.0, 0.0], [2.0, 0.0]) == pytest.approx(0.5, abs=1e-12)
    assert ray_exit_length(DISC, [0.0, 0.0], [0.0, -4.0]) == pytest.approx(0.25, abs=1e-12)


def _implicit_inside(kind: str, Q: np.ndarray) -> np.ndarray:
    x, y = Q[:, 0], Q[:, 1]
    if kind == "disc":
        return x**2 + y**2
    if kind == "ellipse":
        return (x / 2.0) ** 2 + y**2
    return x**4 + y**4


@pytest.mark.parametrize(
    "kind, body", [("disc", DISC), ("ellipse", ELLIPSE), ("pball", PBALL)]
)
def test_distance_sign_matches_containment_on_random_points(kind, body):
    rng = np.random.default_rng(20)
    Q = rng.uniform(-2.5, 2.5, size=(1000, 2))
    level = _implicit_inside(kind, Q)
    keep = np.abs(level - 1.0) > 1e-6
    res = signed_distance_many(body, Q[keep])
    d = res.distance
    np.testing.assert_array_equal(d >= 0, level[keep] <= 1.0)
    if kind == "disc":
        r = np.linalg.norm(Q[keep], axis=1)
        np.testing.assert_allclose(d, 1.0 - r, atol=1e-12)
        np.testing.assert_allclose(res.normal, Q[keep] / r[:, None], atol=1e-12)


def test_distance_sign_on_minkowski_sum_matches_support_test():
    body = ZOO["ellipse_plus_disc"]
    rng = np.random.default_rng(21)
    Q = rng.uniform(-4.0, 4.0, size=(1000, 2))
    U = sphere_grid(2, 4096)
    excess = (Q @ U.T - support_values(body, U)).max(axis=1)
    keep = np.abs(excess) > 1e-3
    d = signed_distance_many(body, Q[keep]).distance
    np.testing.assert_array_equal(d >= 0, excess[keep] <= 0)


@pytest.mark.parametrize("name", sorted(ZOO))
def test_inradius_at_most_half_width(name):
    body = ZOO[name]
    assert inradius(body).radius <= 0.5 * width(body).width + 1e-6
