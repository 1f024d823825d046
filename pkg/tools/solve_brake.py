import asyncio
import logging
from typing import Any, Dict, Optional, Sequence

import numpy as np

from billiards.geometry import Body, inradius
from billiards.loopspace import chord_path
from billiards.penalty import penalty_params_for
from billiards.saddle import SolverOptions, continue_to_zero, geometric_schedule
from billiards.serialization import (
    body_to_spec,
    record_to_dict,
    resolve_body,
    to_jsonable,
    trace_to_dict,
    trajectory_to_dict,
)
from billiards.trajectory import (
    BounceOptions,
    assemble,
    brake_to_periodic,
    detect_bounces,
    verify_reflection,
)
from config import DEFAULT_NODES, create_error_response
from errors import STATUS_SOLVER, BilliardError, describe
from tools.solve_periodic import (
    PENALTY_REFLECTION_TOL,
    check_warnings,
    checks_passed,
    continuation_checks,
    write_artifacts,
)

logger = logging.getLogger(__name__)


def _solve(
    body: Body,
    nodes: int,
    schedule: Sequence[float],
    delta: Optional[float],
    direction: Optional[Sequence[float]],
    solver_options: Optional[dict],
    bounce_options: Optional[dict],
    out_dir: Optional[str],
    name: str,
    svg: bool,
) -> dict:
    params = penalty_params_for(body, schedule[0], delta)
    curve = chord_path(body, nodes, direction)
    opts = SolverOptions(**(solver_options or {}))
    trace = continue_to_zero(curve, body, params.delta, schedule, opts)
    bopts = BounceOptions(**(bounce_options or {}))
    bounces = detect_bounces(trace, bopts, body=body)
    traj = assemble(trace.final, bounces, body, bopts)
    reflection = verify_reflection(traj, body, tol=PENALTY_REFLECTION_TOL)
    doubled = brake_to_periodic(traj)
    checks = continuation_checks(trace, traj, reflection, body)
    # brake 궤적 길이 상한 μ_B ≤ 2n·r
    bound = 2.0 * body.dim * inradius(body).radius
    checks["brake_bound"] = {
        "value": traj.total_length, "tol": bound, "passed": bool(traj.total_length <= bound)
    }
    result = {
        "success": True,
        "mode": "brake",
        "body": body_to_spec(body),
        "delta": params.delta,
        "record": record_to_dict(trace.final),
        "trace": trace_to_dict(trace),
        "trajectory": trajectory_to_dict(traj),
        "doubled": trajectory_to_dict(doubled),
        "reflection": to_jsonable(reflection),
        "length": traj.total_length,
        "doubled_length": doubled.total_length,
        "bounce_count": traj.bounce_count,
        "checks": checks,
        "passed": checks_passed(checks),
        "warnings": check_warnings(checks),
    }
    if out_dir:
        result["files"] = write_artifacts(result, traj, trace.final.curve, body, out_dir, name, svg)
    return result


async def solve_brake(
    body: Any,
    nodes: int = DEFAULT_NODES,
    eps_schedule: Optional[Sequence[float]] = None,
    delta: Optional[float] = None,
    direction: Optional[Sequence[float]] = None,
    solver_options: Optional[dict] = None,
    bounce_options: Optional[dict] = None,
    out_dir: Optional[str] = None,
    name: str = "brake",
    svg: bool = False,
) -> Dict[str, Any]:
    """
    자유 끝점 경로 공간에서 같은 연속법을 돌려 brake 궤적 (양 끝에서 경계에 수직으로
    멈추는 궤적) 을 찾고, 왕복해 겹친 주기 궤적도 함께 돌려줍니다.

    Args:
        body: Body, 바디 스펙 dict 또는 스펙 JSON 경로
        nodes (int): 노드 수 N
        eps_schedule (list, optional): 엄격히 감소하는 ε 목록
        delta (float, optional): 컷오프 폭 δ
        direction (list, optional): 시드 현 방향 (기본: 폭 방향)
        solver_options (dict, optional): SolverOptions 필드
        bounce_options (dict, optional): BounceOptions 필드
        out_dir (str, optional): 산출물 저장 디렉토리
        name (str): 산출물 파일 이름 접두사
        svg (bool): SVG 저장 여부

    Returns:
        Dict[str, Any]: solve_periodic 과 같은 형식에 "doubled", "doubled_length" 추가
    """
    try:
        body = resolve_body(body)
        if direction is not None:
            direction = np.asarray(direction, dtype=float)
        schedule = list(eps_schedule) if eps_schedule is not None else geometric_schedule()
        logger.info("solve_brake 시작: %s, N=%d", body.kind, nodes)
        result = await asyncio.to_thread(
            _solve, body, nodes, schedule, delta, direction, solver_options, bounce_options,
            out_dir, name, svg,
        )
        logger.info(
            "solve_brake 완료: length %.8f, doubled %.8f", result["length"], result["doubled_length"]
        )
        return result
    except BilliardError as e:
        logger.error("solve_brake 실패: %s", describe(e))
        return e.to_response()
    except Exception as e:
        error_msg = f"brake 궤적 계산 중 오류 발생: {describe(e)}"
        logger.error(error_msg)
        return create_error_response(error_msg, STATUS_SOLVER, kind="unexpected")
