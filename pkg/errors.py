from typing import Any, Optional

from config import create_error_response

# 종료 상태 코드
STATUS_CHECK = 1
STATUS_CONFIG = 2
STATUS_SOLVER = 3


class BilliardError(Exception):
    """라이브러리 전체의 기본 예외. kind 는 오류 종류, details 는 진단 정보입니다."""

    kind = "billiard-error"
    status = STATUS_SOLVER

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_response(self) -> dict:
        return create_error_response(
            self.message, self.status, kind=self.kind, details=self.details
        )


class InvalidArgument(BilliardError, ValueError):
    kind = "invalid-argument"
    status = STATUS_CONFIG


class ConfigError(BilliardError):
    kind = "config-error"
    status = STATUS_CONFIG


class NumericalFailure(BilliardError):
    kind = "numerical-failure"


class DomainViolation(BilliardError):
    kind = "domain-violation"


class OverflowGuard(BilliardError):
    """h_δ 가 언더플로 하한 아래로 내려갔을 때. details["distance"] 에 d(q)."""

    kind = "overflow-guard"

    def __init__(self, message: str, distance: float, details: Optional[dict] = None):
        super().__init__(message, {"distance": distance, **(details or {})})
        self.distance = distance


class Collapsed(BilliardError):
    kind = "collapsed"


class Diverged(BilliardError):
    kind = "diverged"


class Escaped(BilliardError):
    kind = "escaped"


class BrokenTrend(BilliardError):
    kind = "broken-trend"


class NoBounces(BilliardError):
    kind = "no-bounces"


class MergeAmbiguity(BilliardError):
    kind = "merge-ambiguity"


class AssemblyFailure(BilliardError):
    kind = "assembly-failure"


class NoCandidates(BilliardError):
    kind = "no-candidates"


class IncompleteReport(BilliardError):
    kind = "incomplete-report"
    status = STATUS_CHECK


def with_epsilon(error: BilliardError, epsilon: float) -> BilliardError:
    """연속법 도중 실패한 ε 를 진단 정보에 덧붙입니다."""
    error.details = {**error.details, "epsilon": epsilon}
    return error


def describe(error: Any) -> str:
    if isinstance(error, BilliardError):
        return f"[{error.kind}] {error.message}"
    return f"[{type(error).__name__}] {error}"
