import asyncio
import logging
import os
from typing import Any, Dict, Optional

from billiards.serialization import resolve_body
from billiards.trajectory import render_svg
from config import OUTPUT_DIR
from errors import BilliardError, describe
from tools.verify_trajectory import load_trajectory

logger = logging.getLogger(__name__)


async def generate_trajectory_chart(
    trajectory: Any,
    body: Any,
    out_dir: Optional[str] = None,
    filename: str = "trajectory.svg",
    title: Optional[str] = None,
) -> Dict[str, Any]:
    """
    평면 당구 궤적을 바디 경계, 직선 구간, 반사점의 내향 법선과 함께 SVG 로 그립니다.

    Args:
        trajectory: BilliardTrajectory, 궤적 dict, 또는 solve/shoot 산출물 JSON 경로
        body: Body, 바디 스펙 dict 또는 스펙 JSON 경로
        out_dir (str, optional): 저장 디렉토리 (기본: BILLIARD_OUTPUT_DIR/charts)
        filename (str): 파일 이름
        title (str, optional): 그림 제목

    Returns:
        Dict[str, Any]:
            - success 시: {"success": True, "file_path": "경로", "filename": "이름", "message": "메시지"}
            - error 시: {"success": False, "error": "오류 메시지"}
    """
    logger.info("궤적 차트 생성 시작: %s", filename)
    try:
        body = resolve_body(body)
        traj = load_trajectory(trajectory)
        charts_dir = out_dir or os.path.join(OUTPUT_DIR, "charts")
        os.makedirs(charts_dir, exist_ok=True)
        path = os.path.join(charts_dir, filename)
        if title is None:
            title = f"{body.kind} {traj.kind}: length {traj.total_length:.6f}"
        file_path = await asyncio.to_thread(render_svg, traj, body, path, title)
        logger.info("궤적 차트 저장 완료: %s", file_path)
        return {
            "success": True,
            "file_path": file_path,
            "filename": os.path.basename(file_path),
            "message": f"{traj.bounce_count}회 반사 궤적 차트가 생성되었습니다.",
        }
    except BilliardError as e:
        error_msg = f"궤적 차트 생성 중 오류 발생: {describe(e)}"
        logger.error(error_msg)
        return {"success": False, "error": error_msg}
