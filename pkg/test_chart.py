#!/usr/bin/env python3
"""
차트 생성 기능 테스트
"""
import asyncio
import os

import numpy as np

from billiards.exact_billiard import BouncePolygon
from billiards.geometry import ball
from billiards.loopspace import diameter_loop
from billiards.saddle import ContinuationTrace, CriticalPointRecord
from billiards.serialization import trace_to_dict
from billiards.trajectory import from_polygon
from tools.generate_continuation_chart import generate_continuation_chart
from tools.generate_trajectory_chart import generate_trajectory_chart

DISC = ball([0.0, 0.0], 1.0)


def _synthetic_trace(steps: int = 4) -> ContinuationTrace:
    """ε 를 절반씩 줄이며 포텐셜 적분이 줄어드는 가짜 연속법 기록."""
    curve = diameter_loop(DISC, 32, direction=[1.0, 0.0], inset=0.95)
    trace = ContinuationTrace()
    for k in range(steps):
        eps = 0.1 * 0.5**k
        potential = eps
        trace.records.append(
            CriticalPointRecord(
                curve=curve,
                lagrangian_value=7.0 - potential,
                grad_norm=1e-10,
                morse_index=1,
                energy_value=7.0 + potential,
                potential_integral=potential,
                epsilon=eps,
                delta=0.1,
            )
        )
        profile = np.full(32, 1e-3)
        profile[[0, 16]] = 1.0
        trace.profiles.append(profile)
    trace.diagnostics = {"potential_ratio": trace.records[-1].potential_integral / 7.0}
    return trace


def test_trajectory_chart(tmp_path):
    """삼각형 궤도 SVG 생성."""
    theta = 2 * np.pi * np.arange(3) / 3
    poly = BouncePolygon(vertices=np.column_stack([np.cos(theta), np.sin(theta)]))
    result = asyncio.run(
        generate_trajectory_chart(from_polygon(poly, DISC), DISC, out_dir=str(tmp_path))
    )
    assert result["success"], result
    assert result["filename"] == "trajectory.svg"
    assert os.path.getsize(result["file_path"]) > 0
    assert "3회 반사" in result["message"]


def test_trajectory_chart_reports_errors(tmp_path):
    result = asyncio.run(generate_trajectory_chart({"kind": "periodic"}, DISC, str(tmp_path)))
    assert result["success"] is False
    assert "오류" in result["error"]


def test_continuation_chart_from_trace_and_dict(tmp_path):
    trace = _synthetic_trace()
    first = asyncio.run(
        generate_continuation_chart(trace, out_dir=str(tmp_path), filename="one.svg")
    )
    assert first["success"], first
    second = asyncio.run(
        generate_continuation_chart(
            {"trace": trace_to_dict(trace)}, out_dir=str(tmp_path), filename="two.svg"
        )
    )
    assert second["success"], second
    # 같은 기록은 같은 SVG
    with open(first["file_path"], encoding="utf-8") as a, open(
        second["file_path"], encoding="utf-8"
    ) as b:
        assert a.read() == b.read()


def test_continuation_chart_rejects_empty_trace(tmp_path):
    result = asyncio.run(
        generate_continuation_chart(
            {"records": [], "profiles": []}, out_dir=str(tmp_path), filename="empty.png"
        )
    )
    assert result["success"] is False
