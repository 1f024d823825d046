import asyncio
import logging
import math
import os
from typing import Any, Dict, Optional, Sequence

from billiards.exact_billiard import bouncing_ball_orbits, disc_orbit_seed, shoot_periodic
from billiards.geometry import Body
from billiards.serialization import (
    body_to_spec,
    dump_json,
    polygon_to_dict,
    resolve_body,
    to_jsonable,
    trajectory_to_dict,
)
from billiards.trajectory import from_polygon, render_svg, verify_reflection
from config import DEFAULT_WORKERS, create_error_response
from errors import STATUS_SOLVER, BilliardError, describe
from tools import bounded_gather

logger = logging.getLogger(__name__)

EXACT_REFLECTION_TOL = 1e-8
# 3차원 법선은 구면 최적화 정확도에 묶임
SPATIAL_REFLECTION_TOL = 1e-6


def _shoot_one(body: Body, k: int, j: int, phase: float) -> dict:
    if k == 2 and body.dim != 2:
        poly = bouncing_ball_orbits(body)[0]
    else:
        poly = shoot_periodic(body, k, disc_orbit_seed(k, j, phase))
    traj = from_polygon(poly, body)
    tol = EXACT_REFLECTION_TOL if body.dim == 2 else SPATIAL_REFLECTION_TOL
    reflection = verify_reflection(traj, body, tol=tol)
    return {
        "k": k,
        "j": j,
        "phase": phase,
        "polygon": polygon_to_dict(poly),
        "trajectory": trajectory_to_dict(traj),
        "length": poly.length,
        "reflection": to_jsonable(reflection),
        "passed": reflection.passed,
        "_traj": traj,
    }


async def shoot_orbits(
    body: Any,
    k_values: Sequence[int] = (2, 3),
    j: int = 1,
    phase: float = 0.0,
    workers: int = DEFAULT_WORKERS,
    out_dir: Optional[str] = None,
    name: str = "shoot",
    svg: bool = False,
) -> Dict[str, Any]:
    """
    반사 법칙을 직접 푸는 사격법으로 k 번 반사하는 주기 궤도들을 계산합니다.

    k 마다 원판의 (k, j) 궤도 법선 각도를 시드로 쓰며, k 값들은 workers 개까지 동시에
    계산합니다. gcd(j, k) ≠ 1 인 k 는 건너뜁니다.

    Args:
        body: Body, 바디 스펙 dict 또는 스펙 JSON 경로 (k ≥ 3 은 평면 전용)
        k_values (list): 반사 횟수 목록 (기본: [2, 3])
        j (int): 회전수
        phase (float): 시드 각도 위상
        workers (int): 동시 실행 수
        out_dir (str, optional): 산출물 저장 디렉토리
        name (str): 산출물 파일 이름 접두사
        svg (bool): SVG 저장 여부

    Returns:
        Dict[str, Any]:
            - 성공 시: {"success": True, "orbits": [{"k", "j", "length", "reflection", ...}],
              "failures": [...], "passed"}
            - 실패 시: {"error": {...}}
    """
    try:
        body = resolve_body(body)
        ks = sorted({int(k) for k in k_values if math.gcd(int(j), int(k)) == 1 and j < k})
        logger.info("shoot_orbits 시작: k=%s, j=%d", ks, j)

        def factory(k):
            async def run():
                try:
                    return await asyncio.to_thread(_shoot_one, body, k, j, phase)
                except BilliardError as e:
                    logger.warning("k=%d 사격 실패: %s", k, describe(e))
                    return {"k": k, "j": j, "error": e.to_response()["error"]}

            return run

        results = await bounded_gather([factory(k) for k in ks], workers)
        orbits = [r for r in results if "error" not in r]
        failures = [r for r in results if "error" in r]
        files = {}
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            for orbit in orbits:
                if svg and body.dim == 2:
                    path = os.path.join(out_dir, f"{name}_k{orbit['k']}.svg")
                    files[f"svg_k{orbit['k']}"] = render_svg(orbit["_traj"], body, path)
        for orbit in orbits:
            orbit.pop("_traj")
        result = {
            "success": True,
            "mode": "shoot",
            "body": body_to_spec(body),
            "orbits": orbits,
            "failures": failures,
            "passed": bool(orbits) and not failures and all(o["passed"] for o in orbits),
        }
        if out_dir:
            files["json"] = dump_json(result, os.path.join(out_dir, f"{name}.json"))
            result["files"] = files
        logger.info("shoot_orbits 완료: %d orbits, %d failures", len(orbits), len(failures))
        return result
    except BilliardError as e:
        logger.error("shoot_orbits 실패: %s", describe(e))
        return e.to_response()
    except Exception as e:
        error_msg = f"사격법 계산 중 오류 발생: {describe(e)}"
        logger.error(error_msg)
        return create_error_response(error_msg, STATUS_SOLVER, kind="unexpected")
