import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from billiards.geometry import (
    Body,
    DistanceResult,
    InradiusReport,
    distance_hessians,
    inradius,
    signed_distance_many,
)
from config import DELTA_FRACTION, DELTA_MAX_FRACTION
from errors import DomainViolation, InvalidArgument, OverflowGuard

logger = logging.getLogger(__name__)

# h 가 이 값·δ 아래면 값 대신 OverflowGuard 를 던져 라인서치가 되돌아가게 함
UNDERFLOW_FLOOR = 1e-12


@dataclass(frozen=True)
class CutoffSpec:
    """
    절단 함수 ρ: [0,1] 에서 항등, [3,∞) 에서 2, 그 사이는 5차 에르미트 보간.

    가운데 조각은 s = (t−1)/2 에 대해 1 + 2s − 2s³ + s⁴ 이며 (5차 계수는 0),
    t=1, t=3 에서 값·1계·2계 도함수가 맞아 C² 입니다. ρ′ = (1−s)²(1+2s) ∈ [0,1].
    """

    knots: tuple = (1.0, 3.0)
    middle: Polynomial = field(
        default_factory=lambda: Polynomial(
            [1.0, 2.0, 0.0, -2.0, 1.0], domain=[1.0, 3.0], window=[0.0, 1.0]
        )
    )

    def pieces(self, order: int) -> tuple:
        identity = Polynomial([0.0, 1.0]).deriv(order)
        plateau = Polynomial([2.0]).deriv(order)
        return identity, self.middle.deriv(order), plateau

    def evaluate(self, t, order: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise InvalidArgument("ρ 는 t ≥ 0 에서만 정의됩니다.", {"t_min": float(np.min(t))})
        identity, middle, plateau = self.pieces(order)
        lo, hi = self.knots
        return np.where(t <= lo, identity(t), np.where(t >= hi, plateau(t), middle(t)))


CUTOFF = CutoffSpec()


def rho(t):
    out = CUTOFF.evaluate(t, 0)
    return float(out) if out.ndim == 0 else out


def rho_d1(t):
    out = CUTOFF.evaluate(t, 1)
    return float(out) if out.ndim == 0 else out


def rho_d2(t):
    out = CUTOFF.evaluate(t, 2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PenaltyParams:
    delta: float
    epsilon: float

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidArgument(f"δ 는 양수여야 합니다: {self.delta}")
        if not self.epsilon > 0:
            raise InvalidArgument(f"ε 는 양수여야 합니다: {self.epsilon}")

    def with_epsilon(self, epsilon: float) -> "PenaltyParams":
        return PenaltyParams(delta=self.delta, epsilon=epsilon)

    def validate_for(self, body: Body, report: Optional[InradiusReport] = None) -> None:
        """δ ≤ inradius/4 를 강제합니다."""
        r = (report or inradius(body)).radius
        if self.delta > DELTA_MAX_FRACTION * r * (1.0 + 1e-12):
            raise InvalidArgument(
                "δ 가 너무 큽니다 (δ ≤ inradius/4).", {"delta": self.delta, "inradius": r}
            )


def penalty_params_for(
    body: Body,
    epsilon: float,
    delta: Optional[float] = None,
    report: Optional[InradiusReport] = None,
) -> PenaltyParams:
    """δ 기본값 inradius/10 (상한 inradius/4) 으로 PenaltyParams 를 만듭니다."""
    report = report or inradius(body)
    if delta is None:
        delta = DELTA_FRACTION * report.radius
    params = PenaltyParams(delta=float(delta), epsilon=float(epsilon))
    params.validate_for(body, report)
    return params


@dataclass(frozen=True)
class BarrierTerms:
    """노드별 d, h_δ, U_δ 와 (요청 시) 그래디언트·헤시안."""

    distance: np.ndarray
    h: np.ndarray
    U: np.ndarray
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None

    def force_density(self, epsilon: float) -> np.ndarray:
        return 2.0 * epsilon * self.h**-3


def barrier_terms(body: Body, delta: float, points, order: int = 0) -> BarrierTerms:
    """
    U_δ(q) = h_δ(q)⁻² − (2δ)⁻², h_δ(q) = δρ(d(q)/δ).

    order=1 이면 ∇U = −2h⁻³∇h (∇h = ρ′(d/δ)∇d, ∇d = −ν),
    order=2 이면 ∇²U = 6h⁻⁴∇h∇hᵀ − 2h⁻³∇²h 까지 계산합니다.
    d ≥ 3δ 인 노드는 U, ∇U, ∇²U 가 모두 0 입니다.

    Raises:
        DomainViolation: 내부가 아닌 점이 있을 때
        OverflowGuard: h < 1e-12·δ 일 때 (details 에 d)
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    res = signed_distance_many(body, X)
    d = res.distance
    outside = d <= 0
    if np.any(outside):
        i = int(np.argmax(outside))
        raise DomainViolation(
            "내부가 아닌 점에서 U_δ 는 정의되지 않습니다.",
            {"index": i, "distance": float(d[i]), "count": int(outside.sum())},
        )
    t = d / delta
    h = delta * rho(t)
    h = np.atleast_1d(h)
    if np.any(h < UNDERFLOW_FLOOR * delta):
        i = int(np.argmin(h))
        raise OverflowGuard("h_δ 가 언더플로 하한 아래입니다.", float(d[i]), {"index": i})
    U = h**-2 - (2.0 * delta) ** -2
    U = np.where(t >= 3.0, 0.0, U)
    if order == 0:
        return BarrierTerms(distance=d, h=h, U=U)

    r1 = np.atleast_1d(rho_d1(t))
    grad_d = -res.normal
    grad_h = r1[:, None] * grad_d
    grad = -2.0 * h[:, None] ** -3 * grad_h
    if order == 1:
        return BarrierTerms(distance=d, h=h, U=U, grad=grad)

    n = body.dim
    hess = np.zeros((len(X), n, n))
    near = np.flatnonzero(t < 3.0)
    if len(near):
        sub = DistanceResult(distance=d[near], normal=res.normal[near], foot=res.foot[near])
        hd = distance_hessians(body, X[near], result=sub)
        r2 = np.atleast_1d(rho_d2(t[near]))
        gd = grad_d[near]
        hess_h = (r2 / delta)[:, None, None] * gd[:, :, None] * gd[:, None, :]
        hess_h = hess_h + r1[near, None, None] * hd
        gh = grad_h[near]
        hn = h[near]
        hess[near] = (
            6.0 * hn[:, None, None] ** -4 * gh[:, :, None] * gh[:, None, :]
            - 2.0 * hn[:, None, None] ** -3 * hess_h
        )
    return BarrierTerms(distance=d, h=h, U=U, grad=grad, hess=hess)


def h_delta(body: Body, delta: float, q) -> float:
    """h_δ(q) = δρ(d(q)/δ)."""
    return float(barrier_terms(body, delta, q).h[0])


def U_delta(body: Body, delta: float, q) -> float:
    return float(barrier_terms(body, delta, q).U[0])


def grad_U(body: Body, delta: float, q) -> np.ndarray:
    return barrier_terms(body, delta, q, order=1).grad[0]


def hess_U(body: Body, delta: float, q) -> np.ndarray:
    return barrier_terms(body, delta, q, order=2).hess[0]
