import asyncio
import logging
from typing import Any, Dict

from billiards.exact_billiard import bouncing_ball_orbits
from billiards.geometry import body_center, extent, inradius, width
from billiards.penalty import penalty_params_for
from billiards.serialization import body_to_spec, resolve_body
from billiards.variational import slab_orbit
from config import EQUALITY_RTOL, create_error_response
from errors import STATUS_SOLVER, BilliardError, describe

logger = logging.getLogger(__name__)


def _geometry(body, max_orbits: int) -> dict:
    slab = width(body)
    chebyshev = inradius(body)
    params = penalty_params_for(body, 1.0, report=chebyshev)
    orbits = bouncing_ball_orbits(body)
    return {
        "success": True,
        "mode": "geom",
        "body": body_to_spec(body),
        "center": body_center(body).tolist(),
        "extent": extent(body),
        "width": slab.width,
        "width_direction": slab.direction.tolist(),
        "inradius": chebyshev.radius,
        "chebyshev_center": chebyshev.center.tolist(),
        "default_delta": params.delta,
        "ghomi_equality_expected": bool(
            abs(2.0 * chebyshev.radius - slab.width) <= EQUALITY_RTOL * slab.width
        ),
        "slab_orbit_length": slab_orbit(body).length,
        "bouncing_ball_lengths": [p.length for p in orbits[:max_orbits]],
        "bouncing_ball_count": len(orbits),
    }


async def body_geometry(body: Any, max_orbits: int = 8) -> Dict[str, Any]:
    """
    바디의 기하량: 폭과 폭 방향, 내접 반지름과 체비쇼프 중심, 기본 δ, 이중 법선 현 길이.

    Args:
        body: Body, 바디 스펙 dict 또는 스펙 JSON 경로
        max_orbits (int): 돌려줄 bouncing ball 궤도 길이 개수

    Returns:
        Dict[str, Any]: 기하량 dict 또는 {"error": {...}}
    """
    try:
        body = resolve_body(body)
        result = await asyncio.to_thread(_geometry, body, max_orbits)
        logger.info(
            "body_geometry: width %.10f, inradius %.10f", result["width"], result["inradius"]
        )
        return result
    except BilliardError as e:
        logger.error("body_geometry 실패: %s", describe(e))
        return e.to_response()
    except Exception as e:
        error_msg = f"기하량 계산 중 오류 발생: {describe(e)}"
        logger.error(error_msg)
        return create_error_response(error_msg, STATUS_SOLVER, kind="unexpected")
