import asyncio
import logging
import os
from typing import Any, Dict, Literal, Optional, Sequence

import numpy as np

from billiards.exact_billiard import disc_orbit_seed
from billiards.geometry import Body, body_center, inradius, support_points
from billiards.loopspace import DiscreteCurve, diameter_loop, polygon_loop
from billiards.penalty import penalty_params_for
from billiards.saddle import (
    ContinuationTrace,
    SolverOptions,
    conservation_defect,
    continue_to_zero,
    geometric_schedule,
)
from billiards.serialization import (
    body_to_spec,
    dump_json,
    record_to_dict,
    resolve_body,
    to_jsonable,
    trace_to_dict,
    trajectory_to_dict,
    write_curve_csv,
)
from billiards.trajectory import (
    BilliardTrajectory,
    BounceOptions,
    assemble,
    detect_bounces,
    render_svg,
    verify_reflection,
)
from config import CONSERVATION_TOL, DEFAULT_NODES, WARM_START_RATIO, create_error_response
from errors import STATUS_SOLVER, BilliardError, describe

logger = logging.getLogger(__name__)

POTENTIAL_RATIO_TOL = 1e-3
PENALTY_REFLECTION_TOL = 1e-3


def periodic_seed(
    body: Body,
    nodes: int,
    seed: Literal["diameter", "polygon"] = "diameter",
    k: int = 3,
    j: int = 1,
    perturb: float = 0.0,
    rng_seed: int = 0,
) -> DiscreteCurve:
    """
    닫힌 곡선 시드. polygon 은 외법선 각도가 원판의 (k, j) 궤도와 같은 경계점을
    중심 쪽으로 0.9 배 줄인 다각형입니다. perturb > 0 이면 inradius 비례 잡음을 더합니다.
    """
    if seed == "diameter":
        curve = diameter_loop(body, nodes)
    else:
        theta = disc_orbit_seed(k, j)
        vertices = support_points(body, np.column_stack([np.cos(theta), np.sin(theta)]))
        curve = polygon_loop(vertices, nodes, inset=0.9, center=body_center(body))
    if perturb > 0:
        rng = np.random.default_rng(rng_seed)
        scale = perturb * inradius(body).radius
        curve = curve.with_nodes(curve.nodes + scale * rng.standard_normal(curve.nodes.shape))
    return curve


def continuation_checks(
    trace: ContinuationTrace, traj: BilliardTrajectory, reflection, body: Body
) -> dict:
    """
    연속법 결과에 대한 통과/실패 판정 모음.

    advisory 항목은 passed 에 들어가지 않고 warnings 로만 보고됩니다.
    """
    final = trace.final
    diag = trace.diagnostics
    # 주기 궤적은 n+1, brake 궤적은 n−1 회 이하
    bounce_bound = body.dim + 1 if traj.kind == "periodic" else body.dim - 1
    conservation = diag.get("conservation") or [
        conservation_defect(r, body) for r in trace.records
    ]
    warm = diag.get("warm_start_ratios") or []
    checks = {
        "potential_ratio": {"value": diag["potential_ratio"], "tol": POTENTIAL_RATIO_TOL},
        "bounce_count": {"value": traj.bounce_count, "tol": bounce_bound},
        "reflection": {"value": reflection.max_residual, "tol": reflection.tol},
        "energy_conservation": {
            "value": max(conservation), "tol": CONSERVATION_TOL, "advisory": True,
            "per_record": conservation,
        },
        "warm_start": {
            "value": max(warm, default=0.0), "tol": WARM_START_RATIO, "advisory": True,
        },
    }
    for item in checks.values():
        item["passed"] = bool(item["value"] <= item["tol"])
    window_ok = all(diag["window_ok"])
    checks["window"] = {"value": window_ok, "window": diag["window"], "passed": window_ok}
    indices = [r.morse_index for r in trace.records]
    stable = len(indices) < 3 or len(set(indices[-3:])) == 1
    checks["index_stability"] = {
        "value": indices[-3:], "passed": stable, "advisory": True,
    }
    checks["final_epsilon"] = final.epsilon
    return checks


def checks_passed(checks: dict) -> bool:
    return all(
        v["passed"] for v in checks.values() if isinstance(v, dict) and not v.get("advisory")
    )


def check_warnings(checks: dict) -> list:
    """통과하지 못한 advisory 항목 이름."""
    return [
        name for name, v in checks.items()
        if isinstance(v, dict) and v.get("advisory") and not v["passed"]
    ]


def _solve(
    body: Body,
    nodes: int,
    schedule: Sequence[float],
    delta: Optional[float],
    seed: str,
    k: int,
    j: int,
    perturb: float,
    rng_seed: int,
    solver_options: Optional[dict],
    bounce_options: Optional[dict],
    out_dir: Optional[str] = None,
    name: str = "periodic",
    svg: bool = False,
) -> dict:
    params = penalty_params_for(body, schedule[0], delta)
    curve = periodic_seed(body, nodes, seed, k, j, perturb, rng_seed)
    opts = SolverOptions(**(solver_options or {}))
    trace = continue_to_zero(curve, body, params.delta, schedule, opts)
    bopts = BounceOptions(**(bounce_options or {}))
    bounces = detect_bounces(trace, bopts, body=body)
    traj = assemble(trace.final, bounces, body, bopts)
    reflection = verify_reflection(traj, body, tol=PENALTY_REFLECTION_TOL)
    checks = continuation_checks(trace, traj, reflection, body)
    result = {
        "success": True,
        "mode": "solve",
        "body": body_to_spec(body),
        "delta": params.delta,
        "seed": {"kind": seed, "k": k, "j": j, "perturb": perturb, "rng_seed": rng_seed},
        "record": record_to_dict(trace.final),
        "trace": trace_to_dict(trace),
        "trajectory": trajectory_to_dict(traj),
        "reflection": to_jsonable(reflection),
        "length": traj.total_length,
        "bounce_count": traj.bounce_count,
        "checks": checks,
        "passed": checks_passed(checks),
        "warnings": check_warnings(checks),
    }
    if out_dir:
        result["files"] = write_artifacts(result, traj, trace.final.curve, body, out_dir, name, svg)
    return result


def write_artifacts(result: dict, traj, curve, body: Body, out_dir: str, name: str, svg: bool):
    """JSON 기록, 곡선 CSV, (평면이면) SVG 를 out_dir 에 저장합니다."""
    os.makedirs(out_dir, exist_ok=True)
    files = {"json": dump_json(result, os.path.join(out_dir, f"{name}.json"))}
    files["csv"] = write_curve_csv(curve, os.path.join(out_dir, f"{name}_curve.csv"))
    if svg and body.dim == 2:
        files["svg"] = render_svg(traj, body, os.path.join(out_dir, f"{name}.svg"), title=name)
    logger.info("artifacts written to %s", out_dir)
    return files


async def solve_periodic(
    body: Any,
    nodes: int = DEFAULT_NODES,
    eps_schedule: Optional[Sequence[float]] = None,
    delta: Optional[float] = None,
    seed: Literal["diameter", "polygon"] = "diameter",
    k: int = 3,
    j: int = 1,
    perturb: float = 0.0,
    rng_seed: int = 0,
    solver_options: Optional[dict] = None,
    bounce_options: Optional[dict] = None,
    out_dir: Optional[str] = None,
    name: str = "periodic",
    svg: bool = False,
) -> Dict[str, Any]:
    """
    벌점 근사 L_ε 의 임계점을 ε → 0 으로 따라가 주기 당구 궤적을 조립합니다.

    Args:
        body: Body, 바디 스펙 dict 또는 스펙 JSON 경로
        nodes (int): 시간 격자 노드 수 N (기본: 256)
        eps_schedule (list, optional): 엄격히 감소하는 ε 목록 (기본: 1e-1·2⁻ᵏ, 13 단계)
        delta (float, optional): 컷오프 폭 δ (기본: inradius/10)
        seed (Literal): "diameter" (폭 방향 지름 왕복) 또는 "polygon" ((k, j) 다각형)
        k (int), j (int): polygon 시드의 꼭짓점 수와 회전수
        perturb (float): 시드 잡음 크기 (inradius 대비)
        rng_seed (int): 잡음 난수 시드
        solver_options (dict, optional): SolverOptions 필드
        bounce_options (dict, optional): BounceOptions 필드 (threshold, gap, straightness)
        out_dir (str, optional): 주어지면 JSON, CSV, SVG 산출물을 저장
        name (str): 산출물 파일 이름 접두사
        svg (bool): 평면 바디의 SVG 저장 여부

    Returns:
        Dict[str, Any]:
            - 성공 시: {"success": True, "record", "trace", "trajectory", "reflection",
              "length", "bounce_count", "checks", "passed", "files"?}
            - 실패 시: {"error": {"message", "status", "kind", "details"}}
    """
    try:
        body = resolve_body(body)
        schedule = list(eps_schedule) if eps_schedule is not None else geometric_schedule()
        logger.info("solve_periodic 시작: %s, N=%d, %d ε steps", body.kind, nodes, len(schedule))
        result = await asyncio.to_thread(
            _solve, body, nodes, schedule, delta, seed, k, j, perturb, rng_seed,
            solver_options, bounce_options, out_dir, name, svg,
        )
        logger.info("solve_periodic 완료: length %.8f", result["length"])
        return result
    except BilliardError as e:
        logger.error("solve_periodic 실패: %s", describe(e))
        return e.to_response()
    except Exception as e:
        error_msg = f"주기 궤적 계산 중 오류 발생: {describe(e)}"
        logger.error(error_msg)
        return create_error_response(error_msg, STATUS_SOLVER, kind="unexpected")
