import csv
import functools
import math

import numpy as np
import pytest

from billiards.exact_billiard import BouncePolygon
from billiards.trajectory import bounce_normals, from_polygon
from billiards.geometry import ball, ellipsoid
from billiards.variational import (
    BodyEstimate,
    MuEstimate,
    body_estimate,
    check_inequalities,
    curve_support,
    curve_sum,
    estimate_mu_p,
    in_p_plus,
    mu_p_ball,
    reports_to_csv,
    shrink_check,
    similar_up_to_translation_scaling,
    slab_orbit,
    support_certificate,
)
from errors import IncompleteReport, InvalidArgument
from resources.body_zoo import BRUNN_MINKOWSKI_PAIRS, NESTED_PAIRS, ZOO

DISC = ball([0.0, 0.0], 1.0)
ELLIPSE = ellipsoid([0.0, 0.0], [2.0, 1.0])
MINOR_AXIS = BouncePolygon(vertices=[[0.0, 1.0], [0.0, -1.0]])


def _triangle(scale=1.0, shift=(0.0, 0.0)):
    theta = 2 * np.pi * np.arange(3) / 3
    return scale * np.column_stack([np.cos(theta), np.sin(theta)]) + np.asarray(shift)


def test_mu_p_ball_closed_forms():
    assert mu_p_ball(1.0) == pytest.approx(4.0)
    assert mu_p_ball(1.0, 3) == pytest.approx(3 * math.sqrt(3))
    assert mu_p_ball(1.0, 4) == pytest.approx(4 * math.sqrt(2))
    assert mu_p_ball(2.0) == pytest.approx(8.0)
    with pytest.raises(InvalidArgument):
        mu_p_ball(0.0)
    with pytest.raises(InvalidArgument):
        mu_p_ball(1.0, 3, 3)


def test_curve_support():
    assert curve_support(MINOR_AXIS, [0.0, 1.0]) == pytest.approx(1.0)
    assert curve_support(_triangle(), [1.0, 0.0]) == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        curve_support(MINOR_AXIS, [0.0, 0.0])


def test_certificate_for_minor_axis():
    """단축 bouncing ball: 법선 {(0,1),(0,−1)}, 볼록 결합 계수 ½, ½."""
    cert = support_certificate(MINOR_AXIS, ELLIPSE, [[0.0, 1.0], [0.0, -1.0]])
    assert cert.accepted
    np.testing.assert_allclose(cert.hull_witness, [0.5, 0.5], atol=1e-9)
    np.testing.assert_allclose(cert.support_slacks, 0.0, atol=1e-12)


def test_certificate_refusals():
    one_sided = support_certificate(MINOR_AXIS, ELLIPSE, [[0.0, 1.0]])
    assert not one_sided.accepted
    assert "conv" in one_sided.refusal

    small = support_certificate(_triangle(0.5), DISC, [[1.0, 0.0], [-1.0, 0.0]])
    assert not small.accepted
    assert small.hull_witness is None


def test_in_p_plus():
    diameter = BouncePolygon(vertices=[[-1.0, 0.0], [1.0, 0.0]])
    assert in_p_plus(diameter, DISC).member
    assert in_p_plus(MINOR_AXIS, ELLIPSE).member
    assert in_p_plus(_triangle(), DISC).member

    inside = in_p_plus(_triangle(0.5, shift=(0.2, 0.0)), DISC)
    assert not inside.member
    assert inside.margin > 0.1


def test_shrink_check_finds_translate():
    fits, witness = shrink_check(BouncePolygon(vertices=[[-1.0, 0.0], [1.0, 0.0]]), DISC)
    assert fits
    assert witness.shape == (2,)
    with pytest.raises(InvalidArgument):
        shrink_check(MINOR_AXIS, ELLIPSE, factor=1.5)


def test_similarity_and_curve_sum():
    tri = _triangle()
    assert similar_up_to_translation_scaling(tri, 3.0 * tri + 1.0)
    assert similar_up_to_translation_scaling(tri, np.roll(tri, 1, axis=0)[::-1])
    assert not similar_up_to_translation_scaling(tri, tri * [1.0, 2.0])
    np.testing.assert_allclose(curve_sum(tri, tri), 2.0 * tri)
    with pytest.raises(InvalidArgument):
        curve_sum(tri, MINOR_AXIS)


def test_slab_orbit_of_ellipse():
    assert slab_orbit(ELLIPSE).length == pytest.approx(4.0, abs=1e-9)


def test_estimate_mu_p_exact():
    disc = estimate_mu_p(DISC)
    assert disc.value == pytest.approx(4.0, abs=1e-8)
    assert disc.method == "bouncing-ball"
    assert disc.slab_value == pytest.approx(4.0, abs=1e-9)

    ellipse = estimate_mu_p(ELLIPSE)
    assert ellipse.value == pytest.approx(4.0, abs=1e-8)
    assert ellipse.trajectory.bounce_count == 2

    assert estimate_mu_p(ball([0.0, 0.0], 3.0)).value == pytest.approx(12.0, abs=1e-7)


def test_inequality_reports():
    disc = body_estimate("disc", DISC)
    ellipse = body_estimate("ellipse", ELLIPSE)
    reports = check_inequalities([disc, ellipse], nested=[("disc", "ellipse")])
    by_key = {(r.name, r.subject): r for r in reports}

    assert by_key[("ghomi", "disc")].verdict == "equality-within-tol"
    short = by_key[("short-bound", "ellipse")]
    assert short.verdict == "holds"
    assert short.lhs == pytest.approx(6.0, abs=1e-5)
    assert by_key[("bounce-count", "disc")].verdict == "holds"
    assert by_key[("monotonicity", "disc⊆ellipse")].verdict in ("holds", "equality-within-tol")


def test_inequality_reports_need_estimates():
    missing = BodyEstimate(name="disc", body=DISC, mu=None, inradius=1.0, width=2.0)
    with pytest.raises(IncompleteReport):
        check_inequalities([missing])

    disc = body_estimate("disc", DISC)
    big = body_estimate("big", ball([0.0, 0.0], 2.0))
    with pytest.raises(IncompleteReport):
        check_inequalities([disc, big], nested=[("big", "disc")])


def test_reports_csv(tmp_path):
    reports = check_inequalities([body_estimate("disc", DISC)])
    path = reports_to_csv(reports, str(tmp_path / "reports.csv"))
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["name", "subject", "lhs", "rhs", "slack", "verdict"]
    assert len(rows) == 1 + len(reports)


def _rotated_triangle(degrees: float):
    theta = 2 * np.pi * np.arange(3) / 3 + np.radians(degrees)
    return np.column_stack([np.cos(theta), np.sin(theta)])


def test_brunn_minkowski_realigns_degenerate_disc_witness():
    """원판의 최소 궤도는 방향이 자유로우므로 타원의 단축 방향 현으로 맞춰 비교합니다."""
    entries = [
        body_estimate(name, ZOO[name]) for name in ("disc", "ellipse_2_1", "ellipse_plus_disc")
    ]
    reports = check_inequalities(entries, pairs=[("disc", "ellipse_2_1", "ellipse_plus_disc")])
    bm = next(r for r in reports if r.name == "brunn-minkowski")
    assert bm.details["witnesses_similar"]
    assert bm.verdict == "equality-within-tol"
    assert bm.lhs == pytest.approx(8.0, abs=1e-8)


def test_brunn_minkowski_equality_needs_similar_witnesses():
    def entry(name, body, value, vertices):
        traj = from_polygon(BouncePolygon(vertices=vertices), body)
        mu = MuEstimate(value=value, trajectory=traj, method="shoot")
        return BodyEstimate(name=name, body=body, mu=mu, inradius=1.0, width=2.0)

    big = ball([0.0, 0.0], 2.0)
    entries = [
        entry("a", DISC, 4.0, _rotated_triangle(0.0)),
        entry("b", DISC, 4.0, _rotated_triangle(30.0)),
        entry("a+b", big, 8.0, [[-2.0, 0.0], [2.0, 0.0]]),
    ]
    bm = next(r for r in check_inequalities(entries, pairs=[("a", "b", "a+b")])
              if r.name == "brunn-minkowski")
    assert not bm.details["witnesses_similar"]
    assert bm.verdict == "holds"


def test_certificate_implies_p_plus_membership():
    """지지함수 증명서를 받은 곡선은 평행이동으로 내부에 들어가지 않습니다."""
    tri = 1.2 * _rotated_triangle(0.0)
    cert = support_certificate(tri, DISC, tri)
    assert cert.accepted
    assert in_p_plus(tri, DISC).member


@functools.lru_cache(maxsize=None)
def _zoo_estimates():
    return tuple(body_estimate(name, ZOO[name]) for name in sorted(ZOO))


@pytest.mark.slow
def test_zoo_witnesses_carry_certificates():
    """당구 궤도 ⇒ 법선 증명서 ⇒ P⁺ 소속."""
    for e in _zoo_estimates():
        traj = e.mu.trajectory
        cert = support_certificate(traj, e.body, bounce_normals(traj, e.body), tol=1e-8)
        assert cert.accepted, (e.name, cert.refusal)
        assert in_p_plus(traj, e.body).member, e.name


@pytest.mark.slow
def test_zoo_inequalities():
    entries = list(_zoo_estimates())
    reports = check_inequalities(entries, BRUNN_MINKOWSKI_PAIRS, NESTED_PAIRS)
    assert all(r.verdict != "fails" for r in reports), [
        (r.name, r.subject, r.slack) for r in reports if r.verdict == "fails"
    ]
    by_key = {(r.name, r.subject): r for r in reports}
    for name in ("pball_4", "ellipse_plus_disc", "disc_plus_pball", "ellipse_plus_pball"):
        assert by_key[("ghomi", name)].verdict in ("holds", "equality-within-tol")
        assert by_key[("brake-bound", name)].verdict == "holds"
    for a, b, s in BRUNN_MINKOWSKI_PAIRS:
        bm = by_key[("brunn-minkowski", f"{a}+{b}")]
        assert bm.verdict == "equality-within-tol", (a, b, bm.slack)
        assert bm.details["witnesses_similar"]
    for inner, outer in NESTED_PAIRS:
        assert by_key[("monotonicity", f"{inner}⊆{outer}")].verdict != "fails"
