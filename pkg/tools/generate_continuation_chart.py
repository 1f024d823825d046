import asyncio
import logging
import os
from typing import Any, Dict, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from billiards.saddle import ContinuationTrace  # noqa: E402
from billiards.serialization import load_json, trace_from_dict  # noqa: E402
from config import BOUNCE_THRESHOLD, OUTPUT_DIR  # noqa: E402
from errors import BilliardError, ConfigError, describe  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["font.family"] = "DejaVu Sans"
plt.rcParams["axes.unicode_minus"] = False
plt.rcParams["svg.hashsalt"] = "billiards"


def load_trace(source: Any) -> ContinuationTrace:
    if isinstance(source, ContinuationTrace):
        return source
    data = load_json(source) if isinstance(source, str) else source
    if not isinstance(data, dict):
        raise ConfigError("연속법 기록은 JSON 객체여야 합니다.")
    if "trace" in data:
        data = data["trace"]
    try:
        trace = trace_from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("연속법 기록 JSON 형식이 올바르지 않습니다.", {"reason": str(e)})
    if not trace.records:
        raise ConfigError("연속법 기록이 비어 있습니다.")
    return trace


def draw_trends(ax, trace: ContinuationTrace):
    """ε 에 대한 포텐셜 적분과 에너지."""
    eps = np.array(trace.epsilons)
    ax.loglog(eps, trace.potential_integrals(), marker="o", color="tab:red", label="∫εU dt")
    ax.loglog(
        eps, [r.energy_value for r in trace.records], marker="s", color="tab:blue", label="energy"
    )
    ax.invert_xaxis()
    ax.set_ylabel("value", fontsize=11)
    ax.legend(fontsize=9)
    ax.grid(True, which="both", alpha=0.3)


def draw_lengths(ax, trace: ContinuationTrace):
    eps = np.array(trace.epsilons)
    ax.semilogx(eps, [r.length_estimate for r in trace.records], marker="o", color="tab:purple")
    ax.invert_xaxis()
    ax.set_xlabel("ε", fontsize=11)
    ax.set_ylabel("√(2L)", fontsize=11)
    ax.grid(True, which="both", alpha=0.3)


def draw_force_density(ax, trace: ContinuationTrace, threshold: float):
    """마지막 기록의 힘 밀도와 반사 검출 임계선."""
    profile = np.asarray(trace.profiles[-1], dtype=float)
    t = trace.final.curve.times
    ax.semilogy(t, np.maximum(profile, 1e-300), color="black", linewidth=1.0)
    ax.axhline(threshold * profile.mean(), color="tab:orange", linestyle="--", label="threshold")
    ax.set_xlabel("t", fontsize=11)
    ax.set_ylabel("2εh⁻³", fontsize=11)
    ax.legend(fontsize=9)
    ax.grid(True, alpha=0.3)


def create_continuation_chart(
    trace: ContinuationTrace, path: str, title: str, threshold: float = BOUNCE_THRESHOLD
) -> str:
    fig, (ax1, ax2, ax3) = plt.subplots(
        3, 1, figsize=(8, 11), gridspec_kw={"height_ratios": [1.5, 1, 1.2]}
    )
    draw_trends(ax1, trace)
    draw_lengths(ax2, trace)
    draw_force_density(ax3, trace, threshold)
    ratio = trace.diagnostics.get("potential_ratio")
    subtitle = f"final ε {trace.final.epsilon:.3e}"
    if ratio is not None:
        subtitle += f" | potential ratio {ratio:.2e}"
    fig.suptitle(f"{title}\n{subtitle}", fontsize=12, fontweight="bold")
    fig.tight_layout()
    fmt = os.path.splitext(path)[1].lstrip(".") or "svg"
    metadata = {"Date": None} if fmt == "svg" else None
    fig.savefig(
        path, format=fmt, dpi=150, bbox_inches="tight", facecolor="white", metadata=metadata
    )
    plt.close(fig)
    return path


async def generate_continuation_chart(
    trace: Any,
    out_dir: Optional[str] = None,
    filename: str = "continuation.svg",
    title: str = "ε → 0 continuation",
) -> Dict[str, Any]:
    """
    연속법 진단을 세 패널로 그립니다: 포텐셜 적분과 에너지의 추세, 길이 추정치,
    마지막 ε 의 힘 밀도.

    Args:
        trace: ContinuationTrace, 기록 dict, 또는 solve/brake 산출물 JSON 경로
        out_dir (str, optional): 저장 디렉토리 (기본: BILLIARD_OUTPUT_DIR/charts)
        filename (str): 파일 이름 (.svg 또는 .png)
        title (str): 그림 제목

    Returns:
        Dict[str, Any]:
            - success 시: {"success": True, "file_path": "경로", "filename": "이름", "message": "메시지"}
            - error 시: {"success": False, "error": "오류 메시지"}
    """
    logger.info("연속법 차트 생성 시작: %s", filename)
    try:
        trace = load_trace(trace)
        charts_dir = out_dir or os.path.join(OUTPUT_DIR, "charts")
        os.makedirs(charts_dir, exist_ok=True)
        path = os.path.join(charts_dir, filename)
        file_path = await asyncio.to_thread(create_continuation_chart, trace, path, title)
        logger.info("연속법 차트 저장 완료: %s", file_path)
        return {
            "success": True,
            "file_path": file_path,
            "filename": os.path.basename(file_path),
            "message": f"{len(trace.records)}단계 연속법 차트가 생성되었습니다.",
        }
    except BilliardError as e:
        error_msg = f"연속법 차트 생성 중 오류 발생: {describe(e)}"
        logger.error(error_msg)
        return {"success": False, "error": error_msg}
