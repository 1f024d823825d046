import asyncio
import logging
from typing import Any, Dict

from billiards.serialization import (
    load_json,
    resolve_body,
    to_jsonable,
    trajectory_from_dict,
)
from billiards.trajectory import (
    BilliardTrajectory,
    bounce_normals,
    brake_to_periodic,
    verify_reflection,
)
from billiards.variational import in_p_plus, support_certificate
from config import create_error_response
from errors import STATUS_CONFIG, STATUS_SOLVER, BilliardError, ConfigError, describe

logger = logging.getLogger(__name__)


def load_trajectory(source: Any) -> BilliardTrajectory:
    if isinstance(source, BilliardTrajectory):
        return source
    data = load_json(source) if isinstance(source, str) else source
    if not isinstance(data, dict):
        raise ConfigError("궤적은 JSON 객체여야 합니다.")
    if "trajectory" in data:
        data = data["trajectory"]
    elif data.get("orbits"):
        # shoot 산출물은 첫 궤도
        data = data["orbits"][0]["trajectory"]
    try:
        return trajectory_from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("궤적 JSON 형식이 올바르지 않습니다.", {"reason": str(e)})


def _verify(traj: BilliardTrajectory, body, tol: float) -> dict:
    reflection = verify_reflection(traj, body, tol=tol)
    loop = brake_to_periodic(traj) if traj.kind == "brake" else traj
    membership = in_p_plus(loop, body)
    certificate = support_certificate(loop, body, bounce_normals(loop, body))
    return {
        "success": True,
        "mode": "verify",
        "kind": traj.kind,
        "length": traj.total_length,
        "bounce_count": traj.bounce_count,
        "reflection": to_jsonable(reflection),
        "p_plus": {
            "member": membership.member,
            "margin": membership.margin,
            "witness": membership.witness.tolist(),
            "directions": membership.directions,
        },
        "certificate": {
            "accepted": certificate.accepted,
            "refusal": certificate.refusal,
            "hull_witness": to_jsonable(certificate.hull_witness),
            "support_slacks": certificate.support_slacks.tolist(),
        },
        "passed": bool(reflection.passed and membership.member),
    }


async def verify_trajectory(trajectory: Any, body: Any, tol: float = 1e-9) -> Dict[str, Any]:
    """
    저장된 궤적이 반사 법칙을 만족하는지, 그리고 P⁺(K) 의 원소인지 검사합니다.

    brake 궤적은 왕복해 겹친 닫힌 곡선으로 P⁺ 판정을 합니다.

    Args:
        trajectory: BilliardTrajectory, 궤적 dict, 또는 solve/shoot 산출물 JSON 경로
        body: Body, 바디 스펙 dict 또는 스펙 JSON 경로
        tol (float): 반사 잔차 허용오차 (벌점 궤적은 1e-3 정도)

    Returns:
        Dict[str, Any]: {"success", "reflection", "p_plus", "certificate", "passed"}
    """
    try:
        body = resolve_body(body)
        traj = load_trajectory(trajectory)
        if traj.dim != body.dim:
            return create_error_response(
                "궤적과 바디의 차원이 다릅니다.", STATUS_CONFIG, kind="config-error",
                details={"trajectory": traj.dim, "body": body.dim},
            )
        result = await asyncio.to_thread(_verify, traj, body, tol)
        logger.info(
            "verify_trajectory: residual %.3e, member %s",
            result["reflection"]["max_residual"], result["p_plus"]["member"],
        )
        return result
    except BilliardError as e:
        logger.error("verify_trajectory 실패: %s", describe(e))
        return e.to_response()
    except Exception as e:
        error_msg = f"궤적 검증 중 오류 발생: {describe(e)}"
        logger.error(error_msg)
        return create_error_response(error_msg, STATUS_SOLVER, kind="unexpected")
