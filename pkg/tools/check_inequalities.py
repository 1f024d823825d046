import asyncio
import dataclasses
import logging
import os
from typing import Any, Dict, Literal, Optional, Sequence

from billiards import variational
from billiards.serialization import dump_json, resolve_body, to_jsonable, trajectory_to_dict
from config import DEFAULT_WORKERS, create_error_response
from errors import STATUS_SOLVER, BilliardError, describe
from tools import bounded_gather

logger = logging.getLogger(__name__)


def _estimate(name: str, body, strategy: str, brake_length: Optional[float]):
    try:
        entry = variational.body_estimate(name, body, strategy)
    except BilliardError as e:
        logger.warning("%s: μ_P 추정 실패: %s", name, describe(e))
        entry = variational.BodyEstimate(
            name=name, body=body, mu=None, inradius=float("nan"), width=float("nan")
        )
    if brake_length is not None:
        entry = dataclasses.replace(
            entry, brake_length=float(brake_length), brake_method="penalty"
        )
    return entry


def _estimate_summary(entry) -> dict:
    summary = {"name": entry.name, "inradius": entry.inradius, "width": entry.width}
    if entry.mu is not None:
        summary.update(
            mu=entry.mu.value,
            method=entry.mu.method,
            candidates=entry.mu.candidates,
            slab_value=entry.mu.slab_value,
            trajectory=trajectory_to_dict(entry.mu.trajectory),
        )
    return summary


async def check_inequalities(
    bodies: Dict[str, Any],
    pairs: Sequence[Sequence[str]] = (),
    nested: Sequence[Sequence[str]] = (),
    strategy: Literal["exact", "penalty", "all"] = "exact",
    brake_lengths: Optional[Dict[str, float]] = None,
    workers: int = DEFAULT_WORKERS,
    out_dir: Optional[str] = None,
    name: str = "inequalities",
) -> Dict[str, Any]:
    """
    바디별 μ_P 를 추정하고 Ghomi, 짧은 궤도 상한, 반사 횟수, Brunn–Minkowski,
    단조성 부등식의 판정 보고서를 만듭니다.

    Args:
        bodies (dict): 이름 → Body, 스펙 dict 또는 스펙 JSON 경로
        pairs (list): (K₁ 이름, K₂ 이름, K₁+K₂ 이름) 목록
        nested (list): (안쪽 이름, 바깥쪽 이름) 목록
        strategy (Literal): estimate_mu_p 의 후보 전략
        brake_lengths (dict, optional): 이름 → brake 궤적 길이 (brake-bound 보고서용)
        workers (int): 동시에 추정할 바디 수
        out_dir (str, optional): 주어지면 JSON 과 CSV 보고서를 저장
        name (str): 산출물 파일 이름 접두사

    Returns:
        Dict[str, Any]:
            - 성공 시: {"success": True, "estimates": [...], "reports": [...], "passed"}
            - 추정치가 빠지면 status 1 의 {"error": {...}}
    """
    try:
        resolved = {key: resolve_body(spec) for key, spec in sorted(bodies.items())}
        brake_lengths = brake_lengths or {}
        logger.info("check_inequalities 시작: %d bodies, strategy=%s", len(resolved), strategy)

        def factory(key, body):
            async def run():
                return await asyncio.to_thread(
                    _estimate, key, body, strategy, brake_lengths.get(key)
                )

            return run

        entries = await bounded_gather(
            [factory(key, body) for key, body in resolved.items()], workers
        )
        reports = await asyncio.to_thread(
            variational.check_inequalities,
            entries,
            [tuple(p) for p in pairs],
            [tuple(p) for p in nested],
        )
        result = {
            "success": True,
            "mode": "inequalities",
            "estimates": [_estimate_summary(e) for e in entries],
            "reports": to_jsonable(reports),
            "passed": all(r.verdict != "fails" for r in reports),
        }
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            result["files"] = {
                "csv": variational.reports_to_csv(reports, os.path.join(out_dir, f"{name}.csv")),
            }
            result["files"]["json"] = dump_json(result, os.path.join(out_dir, f"{name}.json"))
        failed = [r.name + ":" + r.subject for r in reports if r.verdict == "fails"]
        if failed:
            logger.warning("부등식 실패: %s", ", ".join(failed))
        logger.info("check_inequalities 완료: %d reports", len(reports))
        return result
    except BilliardError as e:
        logger.error("check_inequalities 실패: %s", describe(e))
        return e.to_response()
    except Exception as e:
        error_msg = f"부등식 검사 중 오류 발생: {describe(e)}"
        logger.error(error_msg)
        return create_error_response(error_msg, STATUS_SOLVER, kind="unexpected")
