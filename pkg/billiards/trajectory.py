import logging
from dataclasses import dataclass, field
from typing import Literal, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from billiards.exact_billiard import BouncePolygon, polygon_length  # noqa: E402
from billiards.geometry import (  # noqa: E402
    Body,
    boundary_normal,
    extent,
    project_to_boundary,
    signed_distance_many,
    support_points,
)
from billiards.loopspace import length as curve_length  # noqa: E402
from billiards.saddle import ContinuationTrace, CriticalPointRecord  # noqa: E402
from config import BOUNCE_GAP, BOUNCE_THRESHOLD, STRAIGHTNESS  # noqa: E402
from errors import AssemblyFailure, InvalidArgument, MergeAmbiguity, NoBounces  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["font.family"] = "DejaVu Sans"
plt.rcParams["axes.unicode_minus"] = False
plt.rcParams["svg.hashsalt"] = "billiards"


@dataclass(frozen=True)
class BounceOptions:
    threshold: float = BOUNCE_THRESHOLD
    gap: int = BOUNCE_GAP
    straightness: float = STRAIGHTNESS


@dataclass(frozen=True)
class Segment:
    start: np.ndarray
    end: np.ndarray
    direction: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))


@dataclass(frozen=True)
class Bounce:
    time: float
    point: np.ndarray
    cluster: tuple = ()


@dataclass(frozen=True)
class BilliardTrajectory:
    """
    상수 속력의 조각별 직선 궤적. 시간 구간은 [0, 1] (주기 궤적은 S¹) 입니다.

    brake 궤적의 vertices 는 [시작 끝점, 반사점..., 끝 끝점], periodic 은 반사점만 가집니다.
    """

    kind: Literal["periodic", "brake"]
    bounce_times: np.ndarray
    bounce_points: np.ndarray
    segments: list
    speed: float
    total_length: float
    endpoints: Optional[np.ndarray] = None
    straightness: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def vertices(self) -> np.ndarray:
        if self.kind == "brake":
            inner = self.bounce_points.reshape(-1, self.dim)
            return np.vstack([self.endpoints[:1], inner, self.endpoints[1:]])
        return self.bounce_points

    @property
    def dim(self) -> int:
        return len(self.segments[0].start)

    @property
    def bounce_count(self) -> int:
        return len(self.bounce_times)


@dataclass(frozen=True)
class ReflectionReport:
    tangential: np.ndarray
    normal_sum: np.ndarray
    speed_mismatch: np.ndarray
    endpoint: np.ndarray
    max_residual: float
    passed: bool
    tol: float


def _segments_of(points: np.ndarray, closed: bool) -> list:
    path = np.vstack([points, points[:1]]) if closed else points
    segs = []
    for a, b in zip(path[:-1], path[1:]):
        d = b - a
        norm = np.linalg.norm(d)
        if norm == 0:
            raise AssemblyFailure("길이가 0인 구간이 있습니다.", {"point": a.tolist()})
        segs.append(Segment(start=a.copy(), end=b.copy(), direction=d / norm))
    return segs


# ---------------------------------------------------------------------------
# 반사 시각 검출


def _clusters(mask: np.ndarray, closed: bool) -> list:
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return []
    runs = [[idx[0]]]
    for i in idx[1:]:
        if i == runs[-1][-1] + 1:
            runs[-1].append(i)
        else:
            runs.append([i])
    N = len(mask)
    if closed and len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == N - 1:
        runs[0] = runs.pop() + runs[0]
    return runs


def detect_bounces(
    trace: ContinuationTrace,
    opts: Optional[BounceOptions] = None,
    body: Optional[Body] = None,
) -> list:
    """
    마지막 기록의 힘 밀도 2εh⁻³ 을 평균의 threshold 배로 자르고, 연속 구간마다
    밀도 가중 중심 시각에 반사 하나를 둡니다. 반사점은 최대 밀도 노드의 경계 투영입니다.
    열린 곡선의 양 끝에 닿는 구간은 반사가 아닌 끝점 접촉으로 봅니다.

    Raises:
        NoBounces: 닫힌 곡선에서 임계값을 넘는 구간이 없을 때
        MergeAmbiguity: 두 구간 사이가 gap 셀보다 가까울 때
    """
    opts = opts or BounceOptions()
    rec = trace.final
    profile = np.asarray(trace.profiles[-1], dtype=float)
    c = rec.curve
    N = c.N
    cut = opts.threshold * profile.mean()
    runs = _clusters(profile > cut, c.closed)

    for a, b in zip(runs, runs[1:] + (runs[:1] if c.closed and len(runs) > 1 else [])):
        gap = (b[0] - a[-1]) % N - 1
        if gap < opts.gap:
            raise MergeAmbiguity(
                "두 반사 구간이 너무 가깝습니다.",
                {"clusters": [[int(a[0]), int(a[-1])], [int(b[0]), int(b[-1])]], "gap": int(gap)},
            )
    if not c.closed:
        runs = [r for r in runs if r[0] != 0 and r[-1] != N - 1]
    elif not runs:
        raise NoBounces(
            "힘 밀도가 어디서도 임계값을 넘지 않습니다.",
            {"threshold": float(cut), "max": float(profile.max())},
        )

    bounces = []
    for run in runs:
        idx = np.asarray(run)
        weights = profile[idx]
        # 순환 구간은 시작 노드 기준으로 펼쳐 중심을 잡음
        offsets = (idx - idx[0]) % N
        t = ((idx[0] + (weights * offsets).sum() / weights.sum()) % N) * c.dt
        peak = int(idx[np.argmax(weights)])
        point = c.nodes[peak]
        if body is not None:
            point = project_to_boundary(body, point)
        bounces.append(Bounce(time=float(t), point=point, cluster=(int(idx[0]), int(idx[-1]))))
    bounces.sort(key=lambda b: b.time)
    logger.info("detected %d bounces at eps=%.3e", len(bounces), rec.epsilon)
    return bounces


# ---------------------------------------------------------------------------
# 조립과 검증


def assemble(
    final: CriticalPointRecord,
    bounces: list,
    body: Body,
    opts: Optional[BounceOptions] = None,
) -> BilliardTrajectory:
    """
    반사점들을 잇는 직선 구간으로 궤적을 조립합니다. total_length 는 속력 √(2E) 에 주기 1 을
    곱한 값이고, 반사점 다각형의 길이는 extra["polygon_length"] 에 남습니다.

    직진도 잔차는 (a) 각 노드와 같은 시각 구간에 대응하는 현 사이 거리의 최대값과
    (b) 조립 길이 대비 벌점 곡선 길이의 결손 중 큰 값을 다각형 길이로 나눈 것입니다.

    Raises:
        AssemblyFailure: 직진도 잔차가 opts.straightness 를 넘을 때
    """
    opts = opts or BounceOptions()
    c = final.curve
    points = np.array([project_to_boundary(body, b.point) for b in bounces]).reshape(-1, c.dim)
    times = np.array([b.time for b in bounces])
    speed = float(np.sqrt(2.0 * final.energy_value))

    if c.closed:
        if len(points) < 2:
            raise AssemblyFailure("주기 궤적에는 반사가 2번 이상 필요합니다.", {"bounces": len(points)})
        segments = _segments_of(points, closed=True)
        endpoints = None
        knots = np.append(times, times[0] + 1.0)
        path = np.vstack([points, points[:1]])
        node_times = c.times
        node_times = np.where(node_times < times[0], node_times + 1.0, node_times)
    else:
        endpoints = np.array(
            [project_to_boundary(body, c.nodes[0]), project_to_boundary(body, c.nodes[-1])]
        )
        path = np.vstack([endpoints[:1], points, endpoints[1:]])
        segments = _segments_of(path, closed=False)
        knots = np.concatenate([[0.0], times, [1.0]])
        node_times = c.times

    polygon = polygon_length(path, closed=False)
    chord_points = np.column_stack([np.interp(node_times, knots, path[:, k]) for k in range(c.dim)])
    deviation = float(np.linalg.norm(c.nodes - chord_points, axis=1).max())
    defect = abs(polygon - curve_length(c))
    straightness = max(deviation, defect) / polygon
    if straightness > opts.straightness:
        raise AssemblyFailure(
            "벌점 곡선이 아직 직선 구간으로 모이지 않았습니다 (ε 스케줄을 늘리세요).",
            {"straightness": straightness, "deviation": deviation, "length_defect": defect,
             "epsilon": final.epsilon},
        )
    traj = BilliardTrajectory(
        kind="periodic" if c.closed else "brake",
        bounce_times=times,
        bounce_points=points,
        segments=segments,
        speed=speed,
        total_length=speed,
        endpoints=endpoints,
        straightness=straightness,
        extra={
            "epsilon": final.epsilon,
            "length_estimate": final.length_estimate,
            "polygon_length": polygon,
        },
    )
    logger.info(
        "assembled %s trajectory: length %.8f (polygon %.8f), %d bounces",
        traj.kind, speed, polygon, len(times),
    )
    return traj


def from_polygon(poly: BouncePolygon, body: Body, kind: Literal["periodic", "brake"] = "periodic"):
    """꼭짓점 다각형을 등속 궤적으로 바꿉니다. 반사 시각은 호 길이 비율입니다."""
    V = poly.vertices
    closed = kind == "periodic"
    path = np.vstack([V, V[:1]]) if closed else V
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    total = float(seg.sum())
    arc = np.concatenate([[0.0], np.cumsum(seg)])[:-1] / total
    if closed:
        return BilliardTrajectory(
            kind="periodic", bounce_times=arc, bounce_points=V.copy(),
            segments=_segments_of(V, closed=True), speed=total, total_length=total,
        )
    return BilliardTrajectory(
        kind="brake", bounce_times=arc[1:], bounce_points=V[1:-1].copy(),
        segments=_segments_of(V, closed=False), speed=total, total_length=total,
        endpoints=np.array([V[0], V[-1]]),
    )


def brake_to_periodic(traj: BilliardTrajectory) -> BilliardTrajectory:
    """Γ(t) = γ(2t) (t ≤ ½), γ(2 − 2t) (t ≥ ½). 끝점은 반사점이 됩니다."""
    if traj.kind != "brake":
        raise InvalidArgument("brake 궤적만 주기 궤적으로 겹칠 수 있습니다.")
    inner = traj.bounce_points.reshape(-1, traj.dim)
    points = np.vstack([traj.endpoints[:1], inner, traj.endpoints[1:], inner[::-1]])
    t_inner = np.asarray(traj.bounce_times)
    times = np.concatenate([[0.0], 0.5 * t_inner, [0.5], 1.0 - 0.5 * t_inner[::-1]])
    return BilliardTrajectory(
        kind="periodic",
        bounce_times=times,
        bounce_points=points,
        segments=_segments_of(points, closed=True),
        speed=2.0 * traj.speed,
        total_length=2.0 * traj.total_length,
        straightness=traj.straightness,
    )


def bounce_normals(traj: BilliardTrajectory, body: Body) -> np.ndarray:
    pts = traj.bounce_points.reshape(-1, traj.dim)
    if len(pts) == 0:
        return np.empty((0, traj.dim))
    return signed_distance_many(body, pts).normal


def verify_reflection(traj: BilliardTrajectory, body: Body, tol: float = 1e-9) -> ReflectionReport:
    """
    각 반사점에서 (v⁺ − v⁻) 의 접선 성분, (v⁺ + v⁻) 의 법선 성분, 속력 차이를 속력으로
    나눈 잔차를 계산하고, brake 궤적은 끝점 속도의 접선 성분도 봅니다.
    예외를 던지지 않고 보고서를 돌려줍니다.
    """
    segs = traj.segments
    k = traj.bounce_count
    tangential = np.zeros(k)
    normal_sum = np.zeros(k)
    mismatch = np.zeros(k)
    durations = _durations(traj)
    for i in range(k):
        if traj.kind == "periodic":
            incoming, outgoing = segs[i - 1], segs[i]
            d_in, d_out = durations[i - 1], durations[i]
        else:
            incoming, outgoing = segs[i], segs[i + 1]
            d_in, d_out = durations[i], durations[i + 1]
        p = traj.bounce_points[i]
        try:
            nu = boundary_normal(body, p)
        except InvalidArgument:
            tangential[i] = normal_sum[i] = np.inf
            continue
        diff = outgoing.direction - incoming.direction
        tangential[i] = np.linalg.norm(diff - (diff @ nu) * nu)
        normal_sum[i] = abs((outgoing.direction + incoming.direction) @ nu)
        if abs(diff @ nu) <= tol:
            # 스침: 법선 방향 변화가 0
            tangential[i] = max(tangential[i], 1.0)
        v_in = incoming.length / d_in if d_in > 0 else np.inf
        v_out = outgoing.length / d_out if d_out > 0 else np.inf
        mismatch[i] = abs(v_out - v_in) / traj.speed

    endpoint = np.zeros(0)
    if traj.kind == "brake":
        endpoint = np.zeros(2)
        ends = ((traj.endpoints[0], segs[0].direction), (traj.endpoints[1], segs[-1].direction))
        for j, (pt, d) in enumerate(ends):
            try:
                nu = boundary_normal(body, pt)
                endpoint[j] = np.linalg.norm(d - (d @ nu) * nu)
            except InvalidArgument:
                endpoint[j] = np.inf

    parts = [tangential, normal_sum, mismatch, endpoint]
    max_res = float(max((p.max() for p in parts if len(p)), default=0.0))
    return ReflectionReport(
        tangential=tangential,
        normal_sum=normal_sum,
        speed_mismatch=mismatch,
        endpoint=endpoint,
        max_residual=max_res,
        passed=bool(max_res <= tol),
        tol=tol,
    )


def _durations(traj: BilliardTrajectory) -> np.ndarray:
    t = np.asarray(traj.bounce_times, dtype=float)
    if traj.kind == "periodic":
        return np.diff(np.append(t, t[0] + 1.0))
    return np.diff(np.concatenate([[0.0], t, [1.0]]))


# ---------------------------------------------------------------------------
# SVG


def render_svg(traj: BilliardTrajectory, body: Body, path: str, title: Optional[str] = None) -> str:
    """평면 궤적을 바디 경계, 구간, 반사 법선과 함께 SVG 로 저장합니다."""
    if body.dim != 2:
        raise InvalidArgument("SVG 렌더링은 평면 바디만 지원합니다.", {"dim": body.dim})
    theta = np.linspace(0.0, 2.0 * np.pi, 721)
    outline = support_points(body, np.column_stack([np.cos(theta), np.sin(theta)]))

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(outline[:, 0], outline[:, 1], color="black", linewidth=1.2)
    for seg in traj.segments:
        xs, ys = [seg.start[0], seg.end[0]], [seg.start[1], seg.end[1]]
        ax.plot(xs, ys, color="tab:blue", linewidth=1.5)
    pts = traj.bounce_points.reshape(-1, 2)
    if len(pts):
        normals = bounce_normals(traj, body)
        arrow = 0.15 * extent(body)
        ax.scatter(pts[:, 0], pts[:, 1], color="tab:red", s=18, zorder=3)
        ax.quiver(
            pts[:, 0], pts[:, 1], -normals[:, 0], -normals[:, 1],
            angles="xy", scale_units="xy", scale=1.0 / arrow, color="tab:red", width=0.004,
        )
    if traj.endpoints is not None:
        ax.scatter(traj.endpoints[:, 0], traj.endpoints[:, 1], color="tab:green", s=18, zorder=3)
    ax.set_aspect("equal")
    ax.set_title(title or f"{traj.kind} trajectory, length {traj.total_length:.6f}", fontsize=11)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    logger.info("trajectory chart saved: %s", path)
    return path
