import logging
import math
import os
from typing import Any, Optional

from dotenv import load_dotenv

# .env 파일에서 환경 변수 로드 (CLI 플래그가 항상 우선)
load_dotenv()

OUTPUT_DIR = os.environ.get("BILLIARD_OUTPUT_DIR", "./artifacts")
LOG_LEVEL = os.environ.get("BILLIARD_LOG_LEVEL", "INFO")
DEFAULT_NODES = int(os.environ.get("BILLIARD_NODES", "256"))
DEFAULT_TOLERANCE = float(os.environ.get("BILLIARD_TOLERANCE", "1e-9"))
DEFAULT_WORKERS = int(os.environ.get("BILLIARD_WORKERS", "4"))

# 연속법 기본값: 1e-1 에서 시작, 비율 1/2, 13 단계
EPS_START = 1e-1
EPS_RATIO = 0.5
EPS_STEPS = 13

# δ 규칙: inradius/10, 상한 inradius/4
DELTA_FRACTION = 0.1
DELTA_MAX_FRACTION = 0.25

BOUNCE_THRESHOLD = 5.0
BOUNCE_GAP = 3
STRAIGHTNESS = 5e-2
EQUALITY_RTOL = 1e-4

# 연속법 진단: 보존량 상대 표준편차, 단계 시작 기울기 비율
CONSERVATION_TOL = 1e-3
WARM_START_RATIO = 10.0

SEED_GRID = 512
DIRECTION_GRID = {2: 720, 3: 2562}

VALID_MODES = ["solve", "shoot", "brake", "verify", "inequalities", "geom", "report"]
VALID_KINDS = ["ball", "ellipsoid", "p-ball", "minkowski_sum"]


def setup_logging(level: Optional[str] = None) -> None:
    """로그 포맷과 레벨을 한 곳에서 설정합니다."""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def direction_grid_size(dim: int) -> int:
    return DIRECTION_GRID.get(dim, 2562)


# 바디 스펙 유효성 검사 함수
def validate_body_spec(spec: Any) -> tuple:
    """
    JSON 바디 스펙이 올바른 형식인지 검사

    Args:
        spec (dict): {"dim", "kind", "params", "tolerance"} 형식의 스펙.
            minkowski_sum 은 params.summands 에 하위 스펙 목록을 가집니다.

    Returns:
        tuple: (유효성 여부, 오류 메시지)
    """
    if not isinstance(spec, dict):
        return False, "바디 스펙은 JSON 객체여야 합니다."

    dim = spec.get("dim")
    if not isinstance(dim, int) or dim < 1:
        return False, "dim 은 양의 정수여야 합니다."

    kind = spec.get("kind")
    if kind not in VALID_KINDS:
        return False, f"kind 는 {VALID_KINDS} 중 하나여야 합니다."

    params = spec.get("params")
    if not isinstance(params, dict):
        return False, "params 객체가 필요합니다."

    tolerance = spec.get("tolerance", DEFAULT_TOLERANCE)
    if not isinstance(tolerance, (int, float)) or tolerance <= 0:
        return False, "tolerance 는 양수여야 합니다."

    if kind == "minkowski_sum":
        summands = params.get("summands")
        if not isinstance(summands, list) or len(summands) < 2:
            return False, "minkowski_sum 에는 2개 이상의 summands 가 필요합니다."
        for sub in summands:
            ok, message = validate_body_spec(sub)
            if not ok:
                return False, f"summand 오류: {message}"
            if sub["dim"] != dim:
                return False, "summand 의 dim 이 일치하지 않습니다."
        return True, ""

    center = params.get("center", [0.0] * dim)
    if not isinstance(center, list) or len(center) != dim:
        return False, "center 의 길이는 dim 과 같아야 합니다."

    if kind == "ball":
        radius = params.get("radius")
        if not isinstance(radius, (int, float)) or radius <= 0:
            return False, "ball 의 radius 는 양수여야 합니다."
    elif kind == "ellipsoid":
        axes = params.get("semi_axes")
        if not isinstance(axes, list) or len(axes) != dim or min(axes) <= 0:
            return False, "ellipsoid 의 semi_axes 는 dim 개의 양수여야 합니다."
    elif kind == "p-ball":
        scale = params.get("scale")
        p = params.get("p")
        if not isinstance(scale, list) or len(scale) != dim or min(scale) <= 0:
            return False, "p-ball 의 scale 은 dim 개의 양수여야 합니다."
        if not isinstance(p, int) or p < 2 or p % 2 != 0:
            return False, "p-ball 의 p 는 2 이상의 짝수여야 합니다."

    return True, ""


def validate_eps_schedule(schedule: list) -> tuple:
    """ε 스케줄이 비어있지 않고 양수이며 엄격히 감소하는지 검사"""
    if not schedule:
        return False, "ε 스케줄이 비어 있습니다."
    if any((not math.isfinite(e)) or e <= 0 for e in schedule):
        return False, "ε 값은 모두 양수여야 합니다."
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        return False, "ε 스케줄은 엄격히 감소해야 합니다."
    return True, ""


def parse_eps_schedule(text: str) -> list:
    """
    "a:ratio:steps" 형식의 문자열을 기하 수열 ε 스케줄로 변환

    Args:
        text (str): 예) "1e-1:0.5:13"

    Returns:
        list: [a, a·ratio, ..., a·ratio^(steps-1)]. steps 가 0 이면 빈 리스트.

    Raises:
        ValueError: 형식이 맞지 않을 때
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"잘못된 ε 스케줄 형식: {text} (a:ratio:steps)")
    start, ratio, steps = float(parts[0]), float(parts[1]), int(parts[2])
    if not 0 < ratio < 1:
        raise ValueError("ratio 는 0 과 1 사이여야 합니다.")
    return [start * ratio**k for k in range(steps)]


def is_valid_mode(mode: str) -> bool:
    return mode in VALID_MODES


# 에러 응답 생성 함수
def create_error_response(message, status_code=3, kind=None, details=None):
    """
    에러 응답 생성

    Args:
        message (str): 에러 메시지
        status_code (int): 종료 상태 코드 (1 검사 실패, 2 설정 오류, 3 솔버 실패)
        kind (str, optional): 에러 종류 (예: "diverged")
        details (dict, optional): 진단 정보

    Returns:
        dict: 에러 응답
    """
    error = {"message": message, "status": status_code}
    if kind:
        error["kind"] = kind
    if details:
        error["details"] = details
    return {"error": error}
