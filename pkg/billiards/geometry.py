import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, linprog, minimize, minimize_scalar

from config import DEFAULT_TOLERANCE, SEED_GRID
from errors import InvalidArgument, NumericalFailure

logger = logging.getLogger(__name__)

# 평면 거리 오라클의 시드 격자 크기
PLANAR_DISTANCE_SEEDS = 256
SPHERE_DISTANCE_SEEDS = 1024
NEWTON_MAX_ITER = 100
# p-ball 의 평평한 점에서 곡률 반경이 무한대가 되므로 |w| 를 이 값 아래로 자르지 않음
_FLAT_FLOOR = 1e-12


@dataclass(frozen=True)
class Body:
    """
    매끄러운 볼록체. kind 에 따라 사용되는 필드가 다릅니다.

    - ball: center, radius
    - ellipsoid: center, semi_axes (축 정렬)
    - p-ball: center, scale, p (짝수 p ≥ 2), 경계 Σ((x-c)/s)^p = 1
    - minkowski_sum: summands
    """

    dim: int
    kind: Literal["ball", "ellipsoid", "p-ball", "minkowski_sum"]
    center: tuple = ()
    radius: float = 0.0
    semi_axes: tuple = ()
    scale: tuple = ()
    p: int = 2
    summands: tuple = ()
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 1:
            raise InvalidArgument(f"dim 은 양의 정수여야 합니다: {self.dim}")
        if self.tolerance <= 0:
            raise InvalidArgument("tolerance 는 양수여야 합니다.")
        if self.kind == "minkowski_sum":
            if len(self.summands) < 2:
                raise InvalidArgument("minkowski_sum 에는 2개 이상의 summand 가 필요합니다.")
            for sub in self.summands:
                if sub.dim != self.dim:
                    raise InvalidArgument(
                        "차원이 다른 바디의 민코프스키 합은 정의되지 않습니다.",
                        {"dims": [self.dim, sub.dim]},
                    )
            return
        if len(self.center) != self.dim or not np.all(np.isfinite(self.center)):
            raise InvalidArgument("center 는 dim 개의 유한한 좌표여야 합니다.")
        if self.kind == "ball":
            if not self.radius > 0:
                raise InvalidArgument(
                    "반지름이 0 이하인 공은 퇴화된 바디입니다.", {"radius": self.radius}
                )
        elif self.kind == "ellipsoid":
            if len(self.semi_axes) != self.dim or min(self.semi_axes) <= 0:
                raise InvalidArgument("semi_axes 는 dim 개의 양수여야 합니다.")
        elif self.kind == "p-ball":
            if len(self.scale) != self.dim or min(self.scale) <= 0:
                raise InvalidArgument("scale 은 dim 개의 양수여야 합니다.")
            if self.p < 2 or self.p % 2 != 0:
                raise InvalidArgument(f"p 는 2 이상의 짝수여야 합니다: {self.p}")
        else:
            raise InvalidArgument(f"지원하지 않는 kind: {self.kind}")


@dataclass(frozen=True)
class SlabReport:
    direction: np.ndarray
    width: float
    h_plus: float
    h_minus: float


@dataclass(frozen=True)
class InradiusReport:
    center: np.ndarray
    radius: float
    lp_directions: int = 0


@dataclass(frozen=True)
class DistanceResult:
    """signed_distance_many 의 결과. foot 은 가장 가까운 경계점."""

    distance: np.ndarray
    normal: np.ndarray
    foot: np.ndarray
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# 생성자


def ball(center: Sequence[float], radius: float, tolerance: float = DEFAULT_TOLERANCE) -> Body:
    center = tuple(float(c) for c in center)
    return Body(
        dim=len(center), kind="ball", center=center, radius=float(radius), tolerance=tolerance
    )


def ellipsoid(
    center: Sequence[float], semi_axes: Sequence[float], tolerance: float = DEFAULT_TOLERANCE
) -> Body:
    center = tuple(float(c) for c in center)
    return Body(
        dim=len(center),
        kind="ellipsoid",
        center=center,
        semi_axes=tuple(float(a) for a in semi_axes),
        tolerance=tolerance,
    )


def p_ball(
    center: Sequence[float], scale: Sequence[float], p: int, tolerance: float = DEFAULT_TOLERANCE
) -> Body:
    center = tuple(float(c) for c in center)
    return Body(
        dim=len(center),
        kind="p-ball",
        center=center,
        scale=tuple(float(s) for s in scale),
        p=int(p),
        tolerance=tolerance,
    )


def minkowski_sum(b1: Body, b2: Body) -> Body:
    """
    두 바디의 민코프스키 합. 지지함수는 합산 지지함수의 합으로 정확히 계산됩니다.

    Raises:
        InvalidArgument: 차원이 다를 때
    """
    if b1.dim != b2.dim:
        raise InvalidArgument(
            "차원이 다른 바디의 민코프스키 합은 정의되지 않습니다.", {"dims": [b1.dim, b2.dim]}
        )
    summands = []
    for b in (b1, b2):
        summands.extend(b.summands if b.kind == "minkowski_sum" else (b,))
    return Body(
        dim=b1.dim,
        kind="minkowski_sum",
        summands=tuple(summands),
        tolerance=max(b1.tolerance, b2.tolerance),
    )


def scaled(body: Body, c: float) -> Body:
    """원점 기준 c 배 확대 (c > 0)."""
    if not c > 0:
        raise InvalidArgument(f"확대 비율은 양수여야 합니다: {c}")
    if body.kind == "minkowski_sum":
        return Body(
            dim=body.dim,
            kind="minkowski_sum",
            summands=tuple(scaled(b, c) for b in body.summands),
            tolerance=body.tolerance,
        )
    return Body(
        dim=body.dim,
        kind=body.kind,
        center=tuple(c * x for x in body.center),
        radius=c * body.radius,
        semi_axes=tuple(c * a for a in body.semi_axes),
        scale=tuple(c * s for s in body.scale),
        p=body.p,
        tolerance=body.tolerance,
    )


def translated(body: Body, shift: Sequence[float]) -> Body:
    shift = np.asarray(shift, dtype=float)
    if shift.shape != (body.dim,):
        raise InvalidArgument("이동 벡터의 차원이 맞지 않습니다.")
    if body.kind == "minkowski_sum":
        first, *rest = body.summands
        return Body(
            dim=body.dim,
            kind="minkowski_sum",
            summands=(translated(first, shift), *rest),
            tolerance=body.tolerance,
        )
    return Body(
        dim=body.dim,
        kind=body.kind,
        center=tuple(float(x) for x in np.asarray(body.center) + shift),
        radius=body.radius,
        semi_axes=body.semi_axes,
        scale=body.scale,
        p=body.p,
        tolerance=body.tolerance,
    )


def body_center(body: Body) -> np.ndarray:
    """대칭 중심 (합의 경우 중심들의 합). 항상 내부점입니다."""
    if body.kind == "minkowski_sum":
        return np.sum([body_center(b) for b in body.summands], axis=0)
    return np.asarray(body.center, dtype=float)


def extent(body: Body) -> float:
    """중심에서 경계까지의 최대 거리의 상한. 허용오차 스케일링에 사용합니다."""
    if body.kind == "minkowski_sum":
        return float(sum(extent(b) for b in body.summands))
    if body.kind == "ball":
        return body.radius
    if body.kind == "ellipsoid":
        return max(body.semi_axes)
    return float(np.linalg.norm(body.scale))


# ---------------------------------------------------------------------------
# 지지함수 h(K:ν), 그래디언트 ∇h (경계점), 헤시안 ∇²h


def _as_directions(directions, dim: int) -> np.ndarray:
    U = np.atleast_2d(np.asarray(directions, dtype=float))
    if U.shape[-1] != dim:
        raise InvalidArgument(f"방향 벡터의 차원이 {dim} 이 아닙니다.")
    norms = np.linalg.norm(U, axis=1)
    if np.any(norms == 0):
        raise InvalidArgument("영벡터 방향의 지지함수는 정의되지 않습니다.")
    return U


def support_values(body: Body, directions) -> np.ndarray:
    """여러 방향에 대한 지지함수 값. directions 는 (m, n) 배열."""
    U = _as_directions(directions, body.dim)
    if body.kind == "minkowski_sum":
        return np.sum([support_values(b, U) for b in body.summands], axis=0)
    c = np.asarray(body.center)
    if body.kind == "ball":
        return U @ c + body.radius * np.linalg.norm(U, axis=1)
    if body.kind == "ellipsoid":
        a = np.asarray(body.semi_axes)
        return U @ c + np.sqrt(((a * U) ** 2).sum(axis=1))
    q = body.p / (body.p - 1.0)
    w = np.abs(np.asarray(body.scale) * U)
    return U @ c + (w**q).sum(axis=1) ** (1.0 / q)


def support(body: Body, nu) -> float:
    """
    h(K:ν) = max{ s·ν | s ∈ K }.

    Raises:
        InvalidArgument: ν 가 영벡터일 때
    """
    return float(support_values(body, np.asarray(nu, dtype=float)[None, :])[0])


def support_points(body: Body, directions) -> np.ndarray:
    """외법선이 주어진 방향인 경계점 ∇h(u). (m, n) 배열."""
    U = _as_directions(directions, body.dim)
    if body.kind == "minkowski_sum":
        return np.sum([support_points(b, U) for b in body.summands], axis=0)
    c = np.asarray(body.center)
    if body.kind == "ball":
        return c + body.radius * U / np.linalg.norm(U, axis=1)[:, None]
    if body.kind == "ellipsoid":
        a2 = np.asarray(body.semi_axes) ** 2
        s = np.sqrt((a2 * U**2).sum(axis=1))
        return c + a2 * U / s[:, None]
    s_vec = np.asarray(body.scale)
    q = body.p / (body.p - 1.0)
    w = s_vec * U
    norm = (np.abs(w) ** q).sum(axis=1) ** (1.0 / q)
    g = np.sign(w) * np.abs(w) ** (q - 1.0) * norm[:, None] ** (1.0 - q)
    return c + s_vec * g


def support_point(body: Body, nu) -> np.ndarray:
    return support_points(body, np.asarray(nu, dtype=float)[None, :])[0]


def support_hessians(body: Body, directions) -> np.ndarray:
    """∇²h(u), (m, n, n). 단위 u 에서 접평면 제한은 곡률 반경 행렬입니다."""
    U = _as_directions(directions, body.dim)
    n = body.dim
    if body.kind == "minkowski_sum":
        return np.sum([support_hessians(b, U) for b in body.summands], axis=0)
    eye = np.eye(n)[None, :, :]
    if body.kind == "ball":
        r = np.linalg.norm(U, axis=1)
        outer = U[:, :, None] * U[:, None, :]
        return body.radius * (eye / r[:, None, None] - outer / r[:, None, None] ** 3)
    if body.kind == "ellipsoid":
        a2 = np.asarray(body.semi_axes) ** 2
        s = np.sqrt((a2 * U**2).sum(axis=1))
        au = a2 * U
        return (
            np.einsum("ij,jk->ijk", np.ones((len(U), n)) * a2, np.eye(n)) / s[:, None, None]
            - au[:, :, None] * au[:, None, :] / s[:, None, None] ** 3
        )
    s_vec = np.asarray(body.scale)
    q = body.p / (body.p - 1.0)
    w = s_vec * U
    norm = (np.abs(w) ** q).sum(axis=1) ** (1.0 / q)
    g = np.sign(w) * np.abs(w) ** (q - 1.0) * norm[:, None] ** (1.0 - q)
    aw = np.maximum(np.abs(w), _FLAT_FLOOR * norm[:, None])
    diag = aw ** (q - 2.0) * norm[:, None] ** (2.0 - q)
    inner = np.einsum("ij,jk->ijk", diag, np.eye(n)) - g[:, :, None] * g[:, None, :]
    inner *= ((q - 1.0) / norm)[:, None, None]
    return s_vec[None, :, None] * inner * s_vec[None, None, :]


def dominates(inner: Body, outer: Body, directions: Optional[np.ndarray] = None) -> bool:
    """방향 격자 위에서 h(inner) ≤ h(outer) 이면 inner ⊆ outer 로 판정합니다."""
    if directions is None:
        directions = sphere_grid(inner.dim, SEED_GRID)
    slack = support_values(outer, directions) - support_values(inner, directions)
    tol = max(inner.tolerance, outer.tolerance) * max(1.0, extent(outer))
    return bool(np.all(slack >= -tol))


# ---------------------------------------------------------------------------
# 방향 격자


def sphere_grid(dim: int, count: int) -> np.ndarray:
    """
    결정적 방향 격자. 평면은 등각 원, 3차원은 피보나치 구, 그 이상은 고정 시드 가우시안.
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if dim == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        r = np.sqrt(1.0 - z**2)
        phi = np.pi * (1.0 + 5.0**0.5) * k
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    rng = np.random.default_rng(0)
    U = rng.standard_normal((count, dim))
    return U / np.linalg.norm(U, axis=1)[:, None]


def tangent_basis(u: np.ndarray) -> np.ndarray:
    """단위벡터 u 의 직교 여공간 기저 (n, n-1)."""
    n = len(u)
    if n == 2:
        return np.array([[-u[1]], [u[0]]])
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    basis = q[:, 1:n]
    return basis - np.outer(u, u @ basis)


def minimize_on_sphere(fun, grad, u0: np.ndarray, gtol: float = 1e-13) -> np.ndarray:
    """u0 근처 접평면 차트에서 BFGS 로 구면 위 최소점을 찾습니다."""
    T = tangent_basis(u0)

    def chart(y):
        v = u0 + T @ y
        return v / np.linalg.norm(v), np.linalg.norm(v)

    def f(y):
        return fun(chart(y)[0])

    def df(y):
        u, nv = chart(y)
        g = grad(u)
        return T.T @ ((g - u * (u @ g)) / nv)

    res = minimize(f, np.zeros(len(u0) - 1), jac=df, method="BFGS", options={"gtol": gtol})
    return chart(res.x)[0]


# ---------------------------------------------------------------------------
# 부호 거리: d(q) = min_{|u|=1} ( h(K:u) − q·u ), 내부 양수 / 외부 음수


def _planar_fprime(body, theta, Q):
    U = np.column_stack([np.cos(theta), np.sin(theta)])
    T = np.column_stack([-np.sin(theta), np.cos(theta)])
    P = support_points(body, U)
    return ((P - Q) * T).sum(axis=1), U, T, P


def _planar_signed_distance(body: Body, Q: np.ndarray) -> DistanceResult:
    m = len(Q)
    M = PLANAR_DISTANCE_SEEDS
    grid = 2.0 * np.pi * np.arange(M) / M
    G = np.column_stack([np.cos(grid), np.sin(grid)])
    F = support_values(body, G)[None, :] - Q @ G.T
    k = np.argmin(F, axis=1)
    step = 2.0 * np.pi / M
    lo = grid[k] - step
    hi = grid[k] + step
    theta = grid[k].copy()

    f_lo = _planar_fprime(body, lo, Q)[0]
    f_hi = _planar_fprime(body, hi, Q)[0]
    bracketed = (f_lo <= 0) & (f_hi >= 0)

    # 브래킷 안전 뉴턴 (뉴턴이 브래킷을 벗어나면 이분법). 수렴한 점은 더 움직이지 않음
    g_tol = 1e-15 * max(1.0, extent(body))
    converged = np.zeros(m, dtype=bool)
    for _ in range(NEWTON_MAX_ITER):
        g, U, T, P = _planar_fprime(body, theta, Q)
        converged |= np.abs(g) <= g_tol
        if np.all(converged | ~bracketed):
            break
        H = support_hessians(body, U)
        curv = np.einsum("ij,ijk,ik->i", T, H, T) - ((P - Q) * U).sum(axis=1)
        neg = g < 0
        lo = np.where(converged | ~neg, lo, theta)
        hi = np.where(converged | neg, hi, theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = theta - g / curv
        use_newton = (curv > 0) & (newton >= lo) & (newton <= hi)
        new_theta = np.where(use_newton, newton, 0.5 * (lo + hi))
        new_theta = np.where(converged, theta, new_theta)
        delta = np.abs(new_theta - theta)
        theta = new_theta
        converged |= (delta <= 1e-14 * (1.0 + np.abs(theta))) | (hi - lo <= 1e-14)

    fallback = np.flatnonzero(~bracketed | ~converged)
    for i in fallback:
        q = Q[i]

        def f(t, q=q):
            u = np.array([[math.cos(t), math.sin(t)]])
            return float(support_values(body, u)[0] - u[0] @ q)

        res = minimize_scalar(
            f, bounds=(grid[k[i]] - step, grid[k[i]] + step), method="bounded",
            options={"xatol": 1e-13},
        )
        theta[i] = res.x
        if not res.success:
            raise NumericalFailure(
                "경계 투영이 수렴하지 않았습니다.",
                {"point": q.tolist(), "theta": float(res.x), "message": str(res.message)},
            )
    if len(fallback):
        logger.debug("planar projection fallback used for %d of %d points", len(fallback), m)

    U = np.column_stack([np.cos(theta), np.sin(theta)])
    d = support_values(body, U) - (Q * U).sum(axis=1)
    return DistanceResult(distance=d, normal=U, foot=Q + d[:, None] * U)


def _sphere_signed_distance(body: Body, q: np.ndarray, seeds: np.ndarray, seed_h: np.ndarray):
    k = int(np.argmin(seed_h - seeds @ q))

    def fun(u):
        return float(support_values(body, u[None, :])[0] - u @ q)

    def grad(u):
        return support_points(body, u[None, :])[0] - q

    u = minimize_on_sphere(fun, grad, seeds[k])
    g = grad(u)
    residual = np.linalg.norm(g - u * (u @ g))
    if not np.isfinite(residual) or residual > 1e-6 * max(1.0, extent(body)):
        raise NumericalFailure(
            "구면 위 경계 투영이 수렴하지 않았습니다.",
            {"point": q.tolist(), "residual": float(residual)},
        )
    return fun(u), u


def signed_distance_many(body: Body, points) -> DistanceResult:
    """
    여러 점에 대한 부호 거리, 가장 가까운 경계점의 외법선, 그 경계점.

    볼록체에서 d(q) = min_{|u|=1}(h(K:u) − q·u) 가 내부 거리와 외부 음의 거리를
    동시에 줍니다. 최소화 법선 u* 가 곧 가장 가까운 경계점의 외법선이며 ∇d(q) = −u* 입니다.
    """
    Q = np.atleast_2d(np.asarray(points, dtype=float))
    if Q.shape[1] != body.dim:
        raise InvalidArgument("점의 차원이 바디와 다릅니다.")
    if not np.all(np.isfinite(Q)):
        raise InvalidArgument("유한하지 않은 좌표가 있습니다.")
    if body.dim == 1:
        U = np.array([[1.0], [-1.0]])
        F = support_values(body, U)[None, :] - Q @ U.T
        k = np.argmin(F, axis=1)
        d = F[np.arange(len(Q)), k]
        normal = U[k]
        return DistanceResult(distance=d, normal=normal, foot=Q + d[:, None] * normal)
    if body.dim == 2:
        return _planar_signed_distance(body, Q)
    seeds = sphere_grid(body.dim, SPHERE_DISTANCE_SEEDS)
    seed_h = support_values(body, seeds)
    d = np.empty(len(Q))
    normal = np.empty_like(Q)
    for i, q in enumerate(Q):
        d[i], normal[i] = _sphere_signed_distance(body, q, seeds, seed_h)
    return DistanceResult(distance=d, normal=normal, foot=Q + d[:, None] * normal)


def distance_to_boundary(body: Body, q) -> float:
    """d(q) = dist(q, ∂K), 내부 양수, 외부 음수."""
    return float(signed_distance_many(body, np.asarray(q, dtype=float)[None, :]).distance[0])


def project_to_boundary(body: Body, q) -> np.ndarray:
    return signed_distance_many(body, np.asarray(q, dtype=float)[None, :]).foot[0]


def contains(body: Body, q) -> bool:
    return distance_to_boundary(body, q) >= 0.0


def boundary_normal(body: Body, p) -> np.ndarray:
    """
    경계점 p 의 단위 외법선.

    Raises:
        InvalidArgument: p 가 경계 위에 있지 않을 때
    """
    p = np.asarray(p, dtype=float)
    res = signed_distance_many(body, p[None, :])
    d = float(res.distance[0])
    if abs(d) > body.tolerance * max(1.0, float(np.linalg.norm(p))):
        raise InvalidArgument("경계 위의 점이 아닙니다.", {"point": p.tolist(), "distance": d})
    return res.normal[0]


def distance_hessians(body: Body, points, result: Optional[DistanceResult] = None) -> np.ndarray:
    """
    ∇²d(q) = −T (Tᵀ∇²h(u)T − d·I)⁻¹ Tᵀ, T 는 가장 가까운 점 법선 u 의 접평면 기저.

    (m, n, n) 배열. 중심축(medial axis) 위에서는 정의되지 않습니다.
    """
    Q = np.atleast_2d(np.asarray(points, dtype=float))
    res = result if result is not None else signed_distance_many(body, Q)
    n = body.dim
    out = np.zeros((len(Q), n, n))
    if n == 1:
        return out
    H = support_hessians(body, res.normal)
    if n == 2:
        T = np.column_stack([-res.normal[:, 1], res.normal[:, 0]])
        denom = np.einsum("ij,ijk,ik->i", T, H, T) - res.distance
        bad = denom <= 0
        if np.any(bad):
            logger.warning("distance Hessian undefined at %d points (focal set)", int(bad.sum()))
            denom = np.where(bad, np.inf, denom)
        return -T[:, :, None] * T[:, None, :] / denom[:, None, None]
    for i in range(len(Q)):
        T = tangent_basis(res.normal[i])
        M = T.T @ H[i] @ T - res.distance[i] * np.eye(n - 1)
        out[i] = -T @ np.linalg.solve(M, T.T)
    return out


def distance_hessian(body: Body, q, method: Literal["analytic", "fd"] = "analytic") -> np.ndarray:
    """거리 함수의 헤시안. fd 는 법선장의 중심 차분입니다."""
    q = np.asarray(q, dtype=float)
    if method == "analytic":
        return distance_hessians(body, q[None, :])[0]
    h = 1e-6 * max(1.0, extent(body))
    n = body.dim
    shifts = np.concatenate([q + h * np.eye(n), q - h * np.eye(n)])
    normals = signed_distance_many(body, shifts).normal
    jac = -(normals[:n] - normals[n:]).T / (2.0 * h)
    return 0.5 * (jac + jac.T)


# ---------------------------------------------------------------------------
# 폭과 내접 반지름


def _width_values(body: Body, U: np.ndarray) -> np.ndarray:
    return support_values(body, U) + support_values(body, -U)


def width(body: Body, seeds: int = SEED_GRID) -> SlabReport:
    """
    wid(K) = min_{|ν|=1} h(K:ν) + h(K:−ν). 결정적 시드 격자 후 국소 최소화.
    """
    if body.dim == 1:
        u = np.array([1.0])
    elif body.dim == 2:
        theta = np.pi * np.arange(seeds) / seeds
        U = np.column_stack([np.cos(theta), np.sin(theta)])
        k = int(np.argmin(_width_values(body, U)))
        step = np.pi / seeds

        def w(t):
            return float(_width_values(body, np.array([[math.cos(t), math.sin(t)]]))[0])

        res = minimize_scalar(
            w, bounds=(theta[k] - step, theta[k] + step), method="bounded",
            options={"xatol": 1e-12},
        )
        u = np.array([math.cos(res.x), math.sin(res.x)])
    else:
        U = sphere_grid(body.dim, seeds)
        k = int(np.argmin(_width_values(body, U)))
        u = minimize_on_sphere(
            lambda v: float(_width_values(body, v[None, :])[0]),
            lambda v: support_point(body, v) - support_point(body, -v),
            U[k],
        )
    h_plus = support(body, u)
    h_minus = support(body, -u)
    logger.debug("width %.12g along %s", h_plus + h_minus, u)
    return SlabReport(direction=u, width=h_plus + h_minus, h_plus=h_plus, h_minus=h_minus)


def refine_directions(active: np.ndarray, spacing: float, count: int = 16) -> np.ndarray:
    dim = active.shape[1]
    out = []
    for u in active:
        if dim == 2:
            base = math.atan2(u[1], u[0])
            t = base + spacing * np.linspace(-1.0, 1.0, count)
            out.append(np.column_stack([np.cos(t), np.sin(t)]))
        else:
            T = tangent_basis(u)
            rng = np.random.default_rng(len(out))
            y = spacing * rng.uniform(-1.0, 1.0, (count, dim - 1))
            V = u + y @ T.T
            out.append(V / np.linalg.norm(V, axis=1)[:, None])
    return np.concatenate(out) if out else np.empty((0, dim))


def inradius(body: Body, directions: int = SEED_GRID, passes: int = 3) -> InradiusReport:
    """
    내접 반지름 r(K) = max_q d(q) 와 체비쇼프 중심.

    방향 격자 위의 LP (max r s.t. x·u + r ≤ h(u)) 로 전역 최대점 근처를 찾고,
    활성 제약 주변 방향을 추가해 다시 푼 뒤, d 자체를 Nelder–Mead 로 다듬습니다.
    d 는 최대점에서 매끄럽지 않을 수 있어 (예: 타원의 단축 방향) 미분 없는 방법을 씁니다.
    """
    n = body.dim
    U = sphere_grid(n, directions)
    spacing = 2.0 * np.pi / directions if n == 2 else 4.0 / math.sqrt(directions)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    bounds = [(None, None)] * n + [(0.0, None)]
    x = None
    for _ in range(passes + 1):
        A = np.column_stack([U, np.ones(len(U))])
        b = support_values(body, U)
        res = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        if res.status != 0:
            raise NumericalFailure("체비쇼프 중심 LP 가 실패했습니다.", {"message": res.message})
        x = res.x[:n]
        slack = b - A @ res.x
        active = U[slack <= 1e-9 * max(1.0, extent(body))]
        spacing /= 8.0
        U = np.concatenate([U, refine_directions(active, 8.0 * spacing)])

    polish = minimize(
        lambda y: -distance_to_boundary(body, y),
        x,
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000},
    )
    center = polish.x if -polish.fun >= distance_to_boundary(body, x) else x
    radius = distance_to_boundary(body, center)
    if radius <= 0:
        raise NumericalFailure("내부점을 찾지 못했습니다.", {"center": center.tolist()})
    return InradiusReport(center=np.asarray(center), radius=radius, lp_directions=len(U))


# ---------------------------------------------------------------------------
# 반직선과 경계의 교점


def ray_exit_length(body: Body, q, v) -> float:
    """
    q + t·v (t > 0) 가 경계와 처음 만나는 t.

    지지함수 상한 t ≤ h(K:v) − q·v 로 브래킷을 잡고 d(q + t·v) 의 근을 찾습니다.

    Raises:
        NumericalFailure: 브래킷이 잡히지 않을 때
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    t_max = (support(body, v) - float(q @ v)) / float(v @ v)
    d0 = distance_to_boundary(body, q)
    if d0 <= 0 or t_max <= 0:
        raise NumericalFailure(
            "반직선의 시작점이 내부에 있지 않습니다.", {"point": q.tolist(), "distance": d0}
        )
    d_end = distance_to_boundary(body, q + t_max * v)
    # 반직선이 지지점을 정확히 지나면 d_end 는 반올림 오차 크기의 양수일 수 있음
    if d_end > body.tolerance * max(1.0, extent(body)):
        raise NumericalFailure(
            "경계 교점의 브래킷을 찾지 못했습니다.",
            {"point": q.tolist(), "direction": v.tolist(), "t_max": t_max, "distance": d_end},
        )
    if d_end >= 0:
        return t_max
    return brentq(
        lambda t: distance_to_boundary(body, q + t * v), 0.0, t_max, xtol=1e-15, rtol=1e-15
    )


def boundary_point_at_angle(body: Body, theta: float) -> np.ndarray:
    """중심에서 각도 θ 방향 반직선의 경계점 (평면 전용 반경 차트)."""
    if body.dim != 2:
        raise InvalidArgument("반경 차트는 평면 바디에서만 정의됩니다.", {"dim": body.dim})
    c = body_center(body)
    v = np.array([math.cos(theta), math.sin(theta)])
    return c + ray_exit_length(body, c, v) * v
