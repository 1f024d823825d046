"""
임계점 탐색과 ε → 0 연속법 테스트
"""
import numpy as np
import pytest

from billiards.geometry import ball, ellipsoid
from billiards.loopspace import DiscreteCurve, constant_curve, diameter_loop
from billiards.penalty import PenaltyParams
from billiards.saddle import (
    CriticalPointRecord,
    SolverOptions,
    conservation_defect,
    continue_to_zero,
    energy_profile,
    find_critical_point,
    geometric_schedule,
    hessian_spectrum,
    morse_index,
)
from errors import Collapsed, InvalidArgument

DISC = ball([0.0, 0.0], 1.0)


def test_geometric_schedule():
    assert geometric_schedule(0.1, 0.5, 3) == pytest.approx([0.1, 0.05, 0.025])
    assert len(geometric_schedule()) == 13
    with pytest.raises(InvalidArgument):
        geometric_schedule(0.1, 1.0, 3)


def test_constant_seed_collapses():
    seed = constant_curve([0.2, 0.0], 32)
    with pytest.raises(Collapsed):
        find_critical_point(seed, DISC, PenaltyParams(delta=0.1, epsilon=0.1))


def test_schedule_must_decrease():
    seed = diameter_loop(DISC, 32)
    with pytest.raises(InvalidArgument):
        continue_to_zero(seed, DISC, 0.1, [0.1, 0.1])
    with pytest.raises(InvalidArgument):
        continue_to_zero(seed, DISC, 0.1, [])


def test_single_critical_point_on_disc():
    seed = diameter_loop(DISC, 48, direction=[1.0, 0.0])
    opts = SolverOptions()
    rec = find_critical_point(seed, DISC, PenaltyParams(delta=0.1, epsilon=0.1), opts)
    assert rec.grad_norm <= opts.tolerance_for(seed)
    assert rec.potential_integral > 0
    # E = L + 2∫εU
    assert rec.energy_value == pytest.approx(
        rec.lagrangian_value + 2 * rec.potential_integral, rel=1e-12
    )
    index, nullity, lam = hessian_spectrum(rec, DISC)
    assert index == rec.morse_index
    assert len(lam) == 96
    profile = energy_profile(rec, DISC)
    assert profile.shape == (48,)


@pytest.mark.slow
def test_continuation_trends_to_zero_potential():
    seed = diameter_loop(DISC, 64, direction=[1.0, 0.0])
    trace = continue_to_zero(seed, DISC, 0.1, geometric_schedule(0.1, 0.5, 8))
    potentials = trace.potential_integrals()
    assert potentials[-1] < potentials[0]
    assert len(trace.profiles) == 8
    assert trace.diagnostics["potential_ratio"] < 0.05
    lengths = [r.length_estimate for r in trace.records]
    assert lengths[-1] == pytest.approx(4.0, abs=0.1)


def _record(curve, epsilon=0.1, delta=0.1, index=0):
    return CriticalPointRecord(
        curve=curve, lagrangian_value=1.0, grad_norm=0.0, morse_index=index, energy_value=1.0,
        potential_integral=0.0, epsilon=epsilon, delta=delta,
    )


def test_morse_index_uses_record_without_body():
    seed = diameter_loop(DISC, 48, direction=[1.0, 0.0])
    rec = find_critical_point(seed, DISC, PenaltyParams(delta=0.1, epsilon=0.1))
    assert morse_index(rec) == rec.morse_index
    assert morse_index(rec, DISC) == rec.morse_index
    assert morse_index(_record(seed, index=3)) == 3


def test_conservation_defect_of_free_uniform_loop_is_zero():
    """장벽 밖의 등속 원은 보존량이 모든 구간에서 같습니다."""
    theta = 2 * np.pi * np.arange(32) / 32
    circle = DiscreteCurve(nodes=0.5 * np.column_stack([np.cos(theta), np.sin(theta)]))
    assert conservation_defect(_record(circle), DISC) == pytest.approx(0.0, abs=1e-14)

    uneven = DiscreteCurve(nodes=0.5 * np.column_stack([np.cos(theta**1.1), np.sin(theta**1.1)]))
    assert conservation_defect(_record(uneven), DISC) > 1e-2


@pytest.mark.slow
def test_conservation_improves_under_refinement():
    """원판 2주기 임계점의 보존량 편차는 격자를 늘리면 줄어듭니다."""
    params = PenaltyParams(delta=0.1, epsilon=0.1)
    defects = []
    for N in (48, 96):
        seed = diameter_loop(DISC, N, direction=[1.0, 0.0])
        defects.append(conservation_defect(find_critical_point(seed, DISC, params), DISC))
    assert defects[1] < defects[0]


@pytest.mark.slow
def test_continuation_diagnostics_cover_conservation_and_warm_starts():
    seed = diameter_loop(DISC, 64, direction=[1.0, 0.0])
    trace = continue_to_zero(seed, DISC, 0.1, geometric_schedule(0.1, 0.5, 4))
    diag = trace.diagnostics
    assert len(diag["conservation"]) == 4
    assert len(diag["conservation_ok"]) == 4
    assert len(diag["warm_start_ratios"]) == 3
    assert isinstance(diag["warm_start_ok"], bool)


@pytest.mark.slow
def test_ellipse_minor_axis_continuation():
    ellipse = ellipsoid([0.0, 0.0], [2.0, 1.0])
    seed = diameter_loop(ellipse, 64, direction=[0.0, 1.0])
    trace = continue_to_zero(seed, ellipse, 0.1, geometric_schedule(0.1, 0.5, 8))
    assert trace.final.length_estimate == pytest.approx(4.0, abs=0.1)
    assert trace.potential_integrals()[-1] < trace.potential_integrals()[0]
