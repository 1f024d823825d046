import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, least_squares

from billiards.geometry import (
    Body,
    minimize_on_sphere,
    distance_to_boundary,
    extent,
    ray_exit_length,
    sphere_grid,
    support_point,
    support_points,
    support_values,
)
from config import SEED_GRID
from errors import Collapsed, Diverged, InvalidArgument

logger = logging.getLogger(__name__)

SHOOT_TOL = 1e-10


@dataclass(frozen=True)
class BouncePolygon:
    """
    경계 위 꼭짓점들의 순환 목록. 평면 사격 결과는 외법선 각도 angles 를 함께 가집니다.
    """

    vertices: np.ndarray
    closed: bool = True
    angles: Optional[np.ndarray] = None
    residual: float = 0.0

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if len(V) < 2:
            raise InvalidArgument("꼭짓점이 2개 이상 필요합니다.")
        object.__setattr__(self, "vertices", V)

    @property
    def k(self) -> int:
        return len(self.vertices)

    @property
    def length(self) -> float:
        return polygon_length(self.vertices, self.closed)


def polygon_length(vertices, closed: bool = True) -> float:
    V = np.asarray(vertices, dtype=float)
    path = np.vstack([V, V[:1]]) if closed else V
    return float(np.linalg.norm(np.diff(path, axis=0), axis=1).sum())


def reflect(v, nu) -> np.ndarray:
    """
    v − 2(v·ν)ν.

    Raises:
        InvalidArgument: |ν| ≠ 1
    """
    v = np.asarray(v, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if abs(np.linalg.norm(nu) - 1.0) > 1e-9:
        raise InvalidArgument("법선은 단위벡터여야 합니다.", {"norm": float(np.linalg.norm(nu))})
    return v - 2.0 * float(v @ nu) * nu


def ray_exit(body: Body, q, v) -> tuple:
    """
    q 에서 단위 방향 v 로 나아가 처음 만나는 경계점과 비행 거리.

    Raises:
        InvalidArgument: v 가 단위벡터가 아니거나 q 가 내부점이 아닐 때
        NumericalFailure: 브래킷 실패
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise InvalidArgument("방향은 단위벡터여야 합니다.")
    if distance_to_boundary(body, q) <= 0:
        raise InvalidArgument("출발점이 내부에 있지 않습니다.", {"point": q.tolist()})
    t = ray_exit_length(body, q, v)
    return q + t * v, t


# ---------------------------------------------------------------------------
# 평면 사격: 외법선 각도 차트 p(θ) = ∇h(cosθ, sinθ)


def _chart(body: Body, theta: np.ndarray):
    U = np.column_stack([np.cos(theta), np.sin(theta)])
    T = np.column_stack([-np.sin(theta), np.cos(theta)])
    return support_points(body, U), T


def reflection_residuals(body: Body, theta) -> np.ndarray:
    """
    각 꼭짓점에서 (a + b)·τ. a, b 는 꼭짓점에서 이웃 꼭짓점으로 향하는 단위 현 방향,
    τ 는 단위 접벡터이며, 반사 법칙은 a + b 가 법선과 평행함과 같습니다.
    """
    P, T = _chart(body, np.asarray(theta, dtype=float))
    prev = np.roll(P, 1, axis=0) - P
    nxt = np.roll(P, -1, axis=0) - P
    a = prev / np.linalg.norm(prev, axis=1)[:, None]
    b = nxt / np.linalg.norm(nxt, axis=1)[:, None]
    return ((a + b) * T).sum(axis=1)


def disc_orbit_seed(k: int, j: int = 1, phase: float = 0.0) -> np.ndarray:
    """원판의 회전수 j, 반사 k 회 정다각형 궤도의 법선 각도."""
    if k < 2 or not 1 <= j <= k - 1:
        raise InvalidArgument("k ≥ 2, 1 ≤ j ≤ k−1 이어야 합니다.", {"k": k, "j": j})
    return phase + 2.0 * np.pi * j * np.arange(k) / k


def shoot_periodic(
    body: Body, k: int, seed_angles: Optional[Sequence[float]] = None
) -> BouncePolygon:
    """
    k 번 반사하는 주기 궤도를 경계 법선 각도 k 개에 대한 뉴턴형 최소제곱으로 찾습니다.

    Raises:
        InvalidArgument: 평면이 아니거나 k < 2, 시드 각도가 겹칠 때
        Collapsed: 두 꼭짓점이 합쳐질 때
        Diverged: 최대 잔차가 1e-10 을 넘을 때
    """
    if body.dim != 2:
        raise InvalidArgument("사격법은 평면 바디 전용입니다.", {"dim": body.dim})
    if k < 2:
        raise InvalidArgument(f"반사 횟수 k 는 2 이상이어야 합니다: {k}")
    theta0 = disc_orbit_seed(k) if seed_angles is None else np.asarray(seed_angles, dtype=float)
    if len(theta0) != k:
        raise InvalidArgument("시드 각도 수가 k 와 다릅니다.", {"k": k, "seeds": len(theta0)})
    wrapped = np.mod(theta0, 2.0 * np.pi)
    if len(np.unique(np.round(wrapped, 12))) != k:
        raise InvalidArgument("시드 각도가 서로 달라야 합니다.")

    scale = extent(body)

    def fun(theta):
        P, _ = _chart(body, theta)
        gaps = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
        if gaps.min() <= 1e-9 * scale:
            return np.full(k, 1e3)
        return reflection_residuals(body, theta)

    res = least_squares(fun, theta0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    theta = res.x
    P, _ = _chart(body, theta)
    gaps = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
    if gaps.min() <= 1e-6 * scale:
        raise Collapsed("사격 중 두 반사점이 합쳐졌습니다.", {"k": k, "min_gap": float(gaps.min())})
    residual = float(np.abs(reflection_residuals(body, theta)).max())
    if residual > SHOOT_TOL:
        raise Diverged(
            "사격법이 수렴하지 않았습니다.",
            {"k": k, "residual": residual, "nfev": int(res.nfev), "message": str(res.message)},
        )
    poly = BouncePolygon(
        vertices=P, closed=True, angles=np.mod(theta, 2.0 * np.pi), residual=residual
    )
    logger.info("shot k=%d orbit, length %.12f, residual %.2e", k, poly.length, residual)
    return poly


# ---------------------------------------------------------------------------
# 이중 법선 현 (bouncing ball)


def _chord_polygon(body: Body, u: np.ndarray) -> BouncePolygon:
    return BouncePolygon(
        vertices=np.vstack([support_point(body, -u), support_point(body, u)]), closed=True
    )


def _width_fn(body: Body, U: np.ndarray) -> np.ndarray:
    return support_values(body, U) + support_values(body, -U)


def _planar_double_normals(body: Body, count: int) -> list:
    theta = np.pi * (np.arange(count) + 0.5) / count

    def dw(t):
        u = np.array([[math.cos(t), math.sin(t)]])
        tau = np.array([-math.sin(t), math.cos(t)])
        return float((support_points(body, u)[0] - support_points(body, -u)[0]) @ tau)

    values = np.array([dw(t) for t in theta])
    if np.abs(values).max() <= 1e-9 * extent(body):
        # 회전 대칭 족: 대표 하나만
        return [np.array([1.0, 0.0])]
    roots = []
    ends = np.append(theta, theta[0] + np.pi)
    vals = np.append(values, dw(theta[0] + np.pi))
    for a, b, fa, fb in zip(ends[:-1], ends[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(dw, a, b, xtol=1e-15))
    return [np.array([math.cos(t), math.sin(t)]) for t in roots]


def _sphere_double_normals(body: Body, count: int, starts: int = 8) -> list:
    U = sphere_grid(body.dim, count)
    w = _width_fn(body, U)
    out = []
    order = np.argsort(w)
    for sign, seeds in ((1.0, order[:starts]), (-1.0, order[::-1][:starts])):
        for i in seeds:
            out.append(
                minimize_on_sphere(
                    lambda v, s=sign: s * float(_width_fn(body, v[None, :])[0]),
                    lambda v, s=sign: s * (support_point(body, v) - support_point(body, -v)),
                    U[i],
                )
            )
    return out


def bouncing_ball_orbits(body: Body, count: int = SEED_GRID) -> list:
    """
    이중 법선 현을 왕복하는 2주기 궤도들을 길이 오름차순으로 돌려줍니다.

    평면에서는 폭 함수 w(θ) = h(u) + h(−u) 의 임계점을 모두 (부호 변화 + 브렌트) 찾고,
    고차원에서는 폭 최소·최대 방향에서 다중 시작 국소 최적화를 씁니다.
    끝점이 1e-6·지름 이내인 궤도는 같은 것으로 봅니다.
    """
    if body.dim == 1:
        directions = [np.array([1.0])]
    elif body.dim == 2:
        directions = _planar_double_normals(body, count)
    else:
        directions = _sphere_double_normals(body, count)

    diameter = 2.0 * extent(body)
    orbits = []
    for u in directions:
        poly = _chord_polygon(body, u)
        duplicate = False
        for other in orbits:
            same = np.abs(poly.vertices - other.vertices).max()
            flipped = np.abs(poly.vertices[::-1] - other.vertices).max()
            if min(same, flipped) <= 1e-6 * diameter:
                duplicate = True
                break
        if not duplicate:
            orbits.append(poly)
    orbits.sort(key=lambda p: p.length)
    logger.debug("found %d bouncing ball orbits", len(orbits))
    return orbits
