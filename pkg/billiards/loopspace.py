import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from billiards.geometry import (
    Body,
    body_center,
    ray_exit_length,
    width,
)
from billiards.penalty import PenaltyParams, barrier_terms
from errors import InvalidArgument

logger = logging.getLogger(__name__)

MIN_NODES = 8


@dataclass(frozen=True)
class DiscreteCurve:
    """
    균일 시간 격자 위의 폴리라인.

    closed=True 는 S¹ 위의 루프 (Δt = 1/N), False 는 [0,1] 위의 자유 끝점 경로
    (Δt = 1/(N−1)) 입니다.
    """

    nodes: np.ndarray
    closed: bool = True

    def __post_init__(self):
        X = np.array(self.nodes, dtype=float)
        if X.ndim != 2:
            raise InvalidArgument("nodes 는 (N, n) 배열이어야 합니다.", {"shape": list(X.shape)})
        if len(X) < MIN_NODES:
            raise InvalidArgument(f"노드는 {MIN_NODES}개 이상이어야 합니다.", {"N": len(X)})
        if not np.all(np.isfinite(X)):
            raise InvalidArgument("유한하지 않은 노드 좌표가 있습니다.")
        X.setflags(write=False)
        object.__setattr__(self, "nodes", X)
        object.__setattr__(self, "closed", bool(self.closed))

    @property
    def N(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def dt(self) -> float:
        return 1.0 / self.N if self.closed else 1.0 / (self.N - 1)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N) * self.dt

    def segments(self) -> np.ndarray:
        """x_{i+1} − x_i. 닫힌 곡선은 N 개 (마지막이 x_0 − x_{N−1}), 열린 곡선은 N−1 개."""
        if self.closed:
            return np.roll(self.nodes, -1, axis=0) - self.nodes
        return np.diff(self.nodes, axis=0)

    def weights(self) -> np.ndarray:
        """포텐셜 적분의 사다리꼴 가중치."""
        w = np.full(self.N, self.dt)
        if not self.closed:
            w[0] = w[-1] = 0.5 * self.dt
        return w

    def with_nodes(self, nodes) -> "DiscreteCurve":
        nodes = np.asarray(nodes, dtype=float).reshape(self.nodes.shape)
        return DiscreteCurve(nodes=nodes, closed=self.closed)

    def flat(self) -> np.ndarray:
        return self.nodes.reshape(-1)


@dataclass(frozen=True)
class CurveTangent:
    vectors: np.ndarray
    closed: bool = True

    def __post_init__(self):
        V = np.array(self.vectors, dtype=float)
        if V.ndim != 2:
            raise InvalidArgument("접벡터는 (N, n) 배열이어야 합니다.")
        object.__setattr__(self, "vectors", V)

    def flat(self) -> np.ndarray:
        return self.vectors.reshape(-1)

    def norm(self) -> float:
        """노드 유클리드 노름 (솔버 수렴 기준)."""
        return float(np.linalg.norm(self.vectors))

    def compatible_with(self, curve: DiscreteCurve) -> bool:
        return self.vectors.shape == curve.nodes.shape and self.closed == curve.closed


# ---------------------------------------------------------------------------
# 에너지, 길이, 라그랑지안


def energy(c: DiscreteCurve) -> float:
    """E = Σ |x_{i+1} − x_i|² / (2Δt)."""
    return float((c.segments() ** 2).sum() / (2.0 * c.dt))


def length(c: DiscreteCurve) -> float:
    return float(np.linalg.norm(c.segments(), axis=1).sum())


def potential_integral(c: DiscreteCurve, body: Body, params: PenaltyParams) -> float:
    """∫ εU_δ(γ) dt 의 사다리꼴 근사."""
    terms = barrier_terms(body, params.delta, c.nodes)
    return float(params.epsilon * (c.weights() * terms.U).sum())


def lagrangian(c: DiscreteCurve, body: Body, params: PenaltyParams) -> float:
    """
    L_ε(γ) = E(γ) − ε Σ w_i U_δ(x_i).

    Raises:
        DomainViolation: 내부가 아닌 노드가 있을 때
    """
    return energy(c) - potential_integral(c, body, params)


def _energy_gradient(c: DiscreteCurve) -> np.ndarray:
    X = c.nodes
    if c.closed:
        lap = 2.0 * X - np.roll(X, 1, axis=0) - np.roll(X, -1, axis=0)
    else:
        # 자유 끝점: 한쪽 차분만 남아 γ̇(0) = γ̇(1) = 0 의 이산 조건이 됨
        lap = np.empty_like(X)
        lap[1:-1] = 2.0 * X[1:-1] - X[:-2] - X[2:]
        lap[0] = X[0] - X[1]
        lap[-1] = X[-1] - X[-2]
    return lap / c.dt


def grad_lagrangian(c: DiscreteCurve, body: Body, params: PenaltyParams) -> CurveTangent:
    """노드 좌표에 대한 L_ε 의 정확한 그래디언트 (이산 오일러–라그랑주 잔차)."""
    terms = barrier_terms(body, params.delta, c.nodes, order=1)
    g = _energy_gradient(c) - params.epsilon * c.weights()[:, None] * terms.grad
    return CurveTangent(vectors=g, closed=c.closed)


def laplacian_operator(c: DiscreteCurve) -> sp.csr_matrix:
    """에너지의 헤시안 K ⊗ I_n / Δt. 닫힌 곡선은 순환 행렬."""
    N, n = c.N, c.dim
    main = np.full(N, 2.0)
    off = np.full(N - 1, -1.0)
    if not c.closed:
        main[0] = main[-1] = 1.0
    K = sp.diags([off, main, off], [-1, 0, 1], shape=(N, N), format="lil")
    if c.closed:
        K[0, N - 1] = -1.0
        K[N - 1, 0] = -1.0
    return (sp.kron(K.tocsr(), sp.identity(n)) / c.dt).tocsr()


def hess_lagrangian(c: DiscreteCurve, body: Body, params: PenaltyParams) -> sp.csr_matrix:
    """
    L_ε 의 헤시안. 블록 삼중대각 (닫힌 곡선은 순환) 희소 행렬이며
    이산 라플라시안에서 −ε w_i ∇²U_δ(x_i) 블록을 뺍니다.
    """
    terms = barrier_terms(body, params.delta, c.nodes, order=2)
    blocks = params.epsilon * c.weights()[:, None, None] * terms.hess
    return (laplacian_operator(c) - sp.block_diag(list(blocks), format="csr")).tocsr()


def w12_norm(tangent: CurveTangent) -> float:
    """이산 W^{1,2} 노름: (∫|η|² + |η̇|² dt)^{1/2}."""
    V = tangent.vectors
    N = len(V)
    if tangent.closed:
        dt = 1.0 / N
        w = np.full(N, dt)
        dV = np.roll(V, -1, axis=0) - V
    else:
        dt = 1.0 / (N - 1)
        w = np.full(N, dt)
        w[0] = w[-1] = 0.5 * dt
        dV = np.diff(V, axis=0)
    return float(np.sqrt((w * (V**2).sum(axis=1)).sum() + (dV**2).sum() / dt))


def in_sublevel(c: DiscreteCurve, a: float) -> bool:
    return energy(c) <= a


def curve_distance(c1: DiscreteCurve, c2: DiscreteCurve) -> float:
    """같은 격자 위 두 곡선의 최대 노드 거리."""
    if c1.nodes.shape != c2.nodes.shape or c1.closed != c2.closed:
        raise InvalidArgument(
            "격자가 다른 곡선은 비교할 수 없습니다.",
            {"shapes": [list(c1.nodes.shape), list(c2.nodes.shape)]},
        )
    return float(np.linalg.norm(c1.nodes - c2.nodes, axis=1).max())


# ---------------------------------------------------------------------------
# 시드 곡선


def _chord_through_center(body: Body, direction: Optional[Sequence[float]], inset: float):
    if not 0 < inset < 1:
        raise InvalidArgument(f"inset 은 (0, 1) 구간이어야 합니다: {inset}")
    u = width(body).direction if direction is None else np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    c = body_center(body)
    a = c - inset * ray_exit_length(body, c, -u) * u
    b = c + inset * ray_exit_length(body, c, u) * u
    return a, b


def constant_curve(point: Sequence[float], N: int, closed: bool = True) -> DiscreteCurve:
    return DiscreteCurve(nodes=np.tile(np.asarray(point, dtype=float), (N, 1)), closed=closed)


def diameter_loop(
    body: Body,
    N: int,
    direction: Optional[Sequence[float]] = None,
    inset: float = 0.9,
) -> DiscreteCurve:
    """
    중심을 지나는 현을 왕복하는 닫힌 곡선 (t=0 에서 한쪽 끝, t=½ 에서 반대쪽 끝).

    방향을 주지 않으면 폭 방향을 씁니다. 끝점은 경계까지 거리의 inset 배 지점입니다.
    """
    a, b = _chord_through_center(body, direction, inset)
    t = np.arange(N) / N
    tri = 1.0 - np.abs(1.0 - 2.0 * t)
    return DiscreteCurve(nodes=a + tri[:, None] * (b - a), closed=True)


def chord_path(
    body: Body,
    N: int,
    direction: Optional[Sequence[float]] = None,
    inset: float = 0.9,
) -> DiscreteCurve:
    """중심을 지나는 현을 한 번 지나는 열린 곡선 (브레이크 궤적 시드)."""
    a, b = _chord_through_center(body, direction, inset)
    t = np.linspace(0.0, 1.0, N)
    return DiscreteCurve(nodes=a + t[:, None] * (b - a), closed=False)


def polygon_loop(
    vertices,
    N: int,
    closed: bool = True,
    inset: float = 1.0,
    center: Optional[Sequence[float]] = None,
) -> DiscreteCurve:
    """
    다각형을 등속으로 균일 시간 격자에 펼칩니다. 첫 꼭짓점이 t=0 입니다.

    inset < 1 이면 center (기본: 꼭짓점 평균) 쪽으로 축소해 노드를 내부에 둡니다.
    """
    V = np.asarray(vertices, dtype=float)
    if len(V) < 2:
        raise InvalidArgument("다각형에는 꼭짓점이 2개 이상 필요합니다.")
    c = V.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    V = c + inset * (V - c)
    path = np.vstack([V, V[:1]]) if closed else V
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    if np.any(seg == 0):
        raise InvalidArgument("연속한 꼭짓점이 겹칩니다.")
    arc = np.concatenate([[0.0], np.cumsum(seg)]) / seg.sum()
    t = np.arange(N) / N if closed else np.linspace(0.0, 1.0, N)
    nodes = np.column_stack([np.interp(t, arc, path[:, k]) for k in range(V.shape[1])])
    return DiscreteCurve(nodes=nodes, closed=closed)
