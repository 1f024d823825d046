import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from billiards.exact_billiard import (
    BouncePolygon,
    bouncing_ball_orbits,
    disc_orbit_seed,
    shoot_periodic,
)
from billiards.geometry import (
    Body,
    dominates,
    extent,
    inradius,
    refine_directions,
    sphere_grid,
    support_point,
    support_values,
    width,
)
from billiards.loopspace import DiscreteCurve, diameter_loop
from billiards.penalty import penalty_params_for
from billiards.saddle import SolverOptions, continue_to_zero, geometric_schedule
from billiards.trajectory import (
    BilliardTrajectory,
    assemble,
    bounce_normals,
    detect_bounces,
    from_polygon,
    verify_reflection,
)
from config import DEFAULT_NODES, EQUALITY_RTOL, direction_grid_size
from errors import BilliardError, IncompleteReport, InvalidArgument, NoCandidates, NumericalFailure

logger = logging.getLogger(__name__)

# 부등식 판정의 절대 허용오차
INEQUALITY_ATOL = 1e-3
HULL_TOL = 1e-10


@dataclass(frozen=True)
class PPlusCertificate:
    """
    γ ∈ P⁺(K) 의 충분조건 증명서. refusal 이 None 이면 수락입니다.
    """

    normals: np.ndarray
    hull_witness: Optional[np.ndarray]
    support_slacks: np.ndarray
    refusal: Optional[str] = None

    @property
    def accepted(self) -> bool:
        return self.refusal is None


@dataclass(frozen=True)
class PPlusMembership:
    member: bool
    margin: float
    witness: np.ndarray
    directions: int


@dataclass(frozen=True)
class MuEstimate:
    value: float
    trajectory: BilliardTrajectory
    method: str
    candidates: int = 0
    slab_value: float = math.nan


@dataclass(frozen=True)
class InequalityReport:
    name: str
    subject: str
    lhs: float
    rhs: float
    slack: float
    verdict: Literal["holds", "fails", "equality-within-tol"]
    provenance: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)


def _vertices(c) -> np.ndarray:
    if isinstance(c, DiscreteCurve):
        return c.nodes
    if isinstance(c, BouncePolygon):
        return c.vertices
    if isinstance(c, BilliardTrajectory):
        return c.vertices
    return np.atleast_2d(np.asarray(c, dtype=float))


def _curve_supports(c, directions: np.ndarray) -> np.ndarray:
    return (directions @ _vertices(c).T).max(axis=1)


def curve_support(c, nu) -> float:
    """
    h(γ(S¹):ν). 조각별 직선 곡선의 지지값은 꼭짓점에서 얻어집니다.

    Raises:
        InvalidArgument: ν 가 영벡터일 때
    """
    nu = np.asarray(nu, dtype=float)
    if not np.any(nu):
        raise InvalidArgument("영벡터 방향의 지지함수는 정의되지 않습니다.")
    return float(_curve_supports(c, nu[None, :])[0])


def _tolerance(body: Body) -> float:
    return body.tolerance * max(1.0, extent(body))


def support_certificate(c, body: Body, normals, tol: Optional[float] = None) -> PPlusCertificate:
    """
    모든 ν ∈ N 에 대해 h(K:ν) ≤ h(γ:ν) + tol 이고 0 ∈ conv(N) 이면 증명서를 발급합니다.
    볼록 껍질 조건은 단체 위 선형 실현 가능성 문제로 풉니다.
    """
    N = np.atleast_2d(np.asarray(normals, dtype=float))
    norms = np.linalg.norm(N, axis=1)
    if len(N) == 0 or np.any(norms == 0):
        raise InvalidArgument("법선 집합은 비어 있지 않은 영이 아닌 벡터여야 합니다.")
    N = N / norms[:, None]
    tol = _tolerance(body) if tol is None else tol
    slacks = _curve_supports(c, N) - support_values(body, N)

    bad = np.flatnonzero(slacks < -tol)
    if len(bad):
        i = int(bad[0])
        return PPlusCertificate(
            normals=N, hull_witness=None, support_slacks=slacks,
            refusal=f"h(γ:ν) < h(K:ν) at ν={N[i].round(12).tolist()} (slack {slacks[i]:.3e})",
        )

    m, n = N.shape
    A_eq = np.vstack([N.T, np.ones((1, m))])
    b_eq = np.concatenate([np.zeros(n), [1.0]])
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0.0, None)] * m, method="highs")
    if res.status != 0:
        return PPlusCertificate(
            normals=N, hull_witness=None, support_slacks=slacks,
            refusal="0 ∉ conv(N)",
        )
    lam = np.clip(res.x, 0.0, None)
    lam = lam / lam.sum()
    if np.linalg.norm(lam @ N) > HULL_TOL:
        return PPlusCertificate(
            normals=N, hull_witness=None, support_slacks=slacks,
            refusal=f"0 ∉ conv(N) (residual {np.linalg.norm(lam @ N):.3e})",
        )
    return PPlusCertificate(normals=N, hull_witness=lam, support_slacks=slacks)


def in_p_plus(
    c, body: Body, directions: Optional[int] = None, passes: int = 3
) -> PPlusMembership:
    """
    γ(S¹) + x ⊂ int K 인 평행이동 x 가 있는지 LP 로 판정합니다.

    방향 격자 ν 위에서 x·ν + m ≤ h(K:ν) − h(γ:ν) 를 만족하는 최대 여유 m 을 구하고,
    활성 제약 주변으로 격자를 다듬습니다. m ≤ 허용오차면 P⁺(K) 의 원소 (member=True),
    아니면 witness 가 들어가는 평행이동입니다.

    Raises:
        NumericalFailure: LP 실패
    """
    n = body.dim
    count = directions or direction_grid_size(n)
    U = sphere_grid(n, count)
    spacing = 2.0 * np.pi / count if n == 2 else 4.0 / math.sqrt(count)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    bound = 2.0 * extent(body) + float(np.abs(_vertices(c)).max())
    bounds = [(-bound, bound)] * n + [(None, bound)]
    for _ in range(passes + 1):
        A = np.column_stack([U, np.ones(len(U))])
        b = support_values(body, U) - _curve_supports(c, U)
        res = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        if res.status != 0:
            raise NumericalFailure("P⁺ 판정 LP 가 실패했습니다.", {"message": res.message})
        slack = b - A @ res.x
        active = U[slack <= 1e-9 * max(1.0, extent(body))]
        spacing /= 8.0
        U = np.concatenate([U, refine_directions(active, 8.0 * spacing)])
    margin = float(res.x[-1])
    member = margin <= 1e-8 * max(1.0, extent(body))
    return PPlusMembership(member=member, margin=margin, witness=res.x[:n], directions=len(U))


def mu_p_ball(r: float, k: int = 2, j: int = 1) -> float:
    """반지름 r 원판의 (k, j) 주기 궤도 길이 2kr·sin(πj/k)."""
    if not r > 0:
        raise InvalidArgument(f"r 은 양수여야 합니다: {r}")
    if k < 2 or not 1 <= j <= k - 1:
        raise InvalidArgument("k ≥ 2, 1 ≤ j ≤ k−1 이어야 합니다.", {"k": k, "j": j})
    return 2.0 * k * r * math.sin(math.pi * j / k)


def slab_orbit(body: Body) -> BouncePolygon:
    """가장 좁은 슬랩 방향의 이중 법선 현 왕복 궤도."""
    slab = width(body)
    u = slab.direction
    return BouncePolygon(vertices=np.vstack([support_point(body, -u), support_point(body, u)]))


def _shot_candidates(body: Body, max_k: int, phases: int) -> list:
    out = []
    for k in range(3, max_k + 1):
        for j in range(1, k):
            if math.gcd(j, k) != 1 or 2 * j > k:
                continue
            for p in range(phases):
                seed = disc_orbit_seed(k, j, phase=np.pi * p / (phases * k))
                try:
                    out.append(("shoot", shoot_periodic(body, k, seed)))
                except BilliardError as e:
                    logger.debug("shooting k=%d j=%d failed: %s", k, j, e.message)
    return out


def _penalty_candidate(body: Body, nodes: int, schedule, opts) -> Optional[BilliardTrajectory]:
    seed = diameter_loop(body, nodes)
    params = penalty_params_for(body, schedule[0])
    trace = continue_to_zero(seed, body, params.delta, schedule, opts)
    bounces = detect_bounces(trace, body=body)
    return assemble(trace.final, bounces, body)


def estimate_mu_p(
    body: Body,
    strategy: Literal["exact", "penalty", "all"] = "exact",
    max_k: int = 5,
    phases: int = 2,
    nodes: int = DEFAULT_NODES,
    schedule: Optional[Sequence[float]] = None,
    opts: Optional[SolverOptions] = None,
) -> MuEstimate:
    """
    실현된 궤도 길이의 최소값으로 μ_P 를 위에서 추정합니다.

    exact: 이중 법선 궤도 전부와 (평면이면) k ≤ max_k 사격 궤도.
    penalty: 폭 방향 지름 루프 시드의 ε → 0 연속법 결과.
    반사 법칙 검증과 P⁺ 판정을 통과한 후보만 씁니다. 2·wid 는 교차 확인용으로만 기록합니다.

    Raises:
        NoCandidates: 모든 솔버가 실패했을 때
    """
    candidates = []
    if strategy in ("exact", "all"):
        candidates += [("bouncing-ball", p) for p in bouncing_ball_orbits(body)]
        if body.dim == 2:
            candidates += _shot_candidates(body, max_k, phases)
    if strategy in ("penalty", "all"):
        try:
            traj = _penalty_candidate(
                body, nodes, list(schedule or geometric_schedule()), opts
            )
            candidates.append(("penalty", traj))
        except BilliardError as e:
            logger.warning("penalty pipeline produced no candidate: %s", e.message)

    best = None
    accepted = 0
    for method, cand in sorted(candidates, key=lambda mc: _length_of(mc[1])):
        traj = cand if isinstance(cand, BilliardTrajectory) else from_polygon(cand, body)
        tol = 1e-3 if method == "penalty" else 1e-6
        if not verify_reflection(traj, body, tol=tol).passed:
            continue
        if not in_p_plus(traj, body).member:
            continue
        accepted += 1
        if best is None:
            best = (method, traj)
    if best is None:
        raise NoCandidates("검증을 통과한 궤도가 없습니다.", {"candidates": len(candidates)})
    method, traj = best
    estimate = MuEstimate(
        value=traj.total_length,
        trajectory=traj,
        method=method,
        candidates=accepted,
        slab_value=2.0 * width(body).width,
    )
    logger.info(
        "mu_P estimate %.10f via %s (%d verified candidates)", estimate.value, method, accepted
    )
    return estimate


def _length_of(cand) -> float:
    return cand.total_length if isinstance(cand, BilliardTrajectory) else cand.length


# ---------------------------------------------------------------------------
# 곡선 연산


def curve_sum(c1, c2) -> np.ndarray:
    """같은 시각 격자 위 두 곡선의 점별 합."""
    V1, V2 = _vertices(c1), _vertices(c2)
    if V1.shape != V2.shape:
        raise InvalidArgument(
            "점별 합에는 같은 격자가 필요합니다.", {"shapes": [list(V1.shape), list(V2.shape)]}
        )
    return V1 + V2


def shrink_check(c, body: Body, factor: float = 0.99) -> tuple:
    """
    꼭짓점 무게중심 기준으로 factor 배 줄인 곡선이 평행이동으로 int K 에 들어가는지.
    (들어감 여부, 평행이동 witness).
    """
    if not 0 < factor < 1:
        raise InvalidArgument(f"축소 비율은 (0, 1) 이어야 합니다: {factor}")
    V = _vertices(c)
    center = V.mean(axis=0)
    shrunk = center + factor * (V - center)
    result = in_p_plus(shrunk, body)
    return (not result.member), result.witness


def _normalize_shape(V: np.ndarray) -> np.ndarray:
    W = V - V.mean(axis=0)
    scale = np.sqrt((W**2).sum(axis=1).mean())
    return W / scale if scale > 0 else W


def similar_up_to_translation_scaling(p1, p2, tol: float = 1e-6) -> bool:
    """평행이동과 양의 배율 (순환 이동·역순 허용) 로 같은 꼭짓점 배열인지."""
    V1, V2 = _normalize_shape(_vertices(p1)), _normalize_shape(_vertices(p2))
    if V1.shape != V2.shape:
        return False
    for W in (V2, V2[::-1]):
        for s in range(len(W)):
            if np.abs(np.roll(W, s, axis=0) - V1).max() <= tol:
                return True
    return False


# ---------------------------------------------------------------------------
# 부등식 보고서


def _verdict(
    lhs: float, rhs: float, rtol: float = EQUALITY_RTOL, atol: float = INEQUALITY_ATOL
) -> str:
    slack = lhs - rhs
    if abs(slack) <= rtol * max(abs(lhs), abs(rhs)):
        return "equality-within-tol"
    return "holds" if slack >= -atol else "fails"


def _report(name, subject, lhs, rhs, provenance, **details) -> InequalityReport:
    return InequalityReport(
        name=name, subject=subject, lhs=float(lhs), rhs=float(rhs), slack=float(lhs - rhs),
        verdict=_verdict(lhs, rhs), provenance=provenance, details=details,
    )


@dataclass(frozen=True)
class BodyEstimate:
    name: str
    body: Body
    mu: Optional[MuEstimate]
    inradius: float
    width: float
    brake_length: Optional[float] = None
    brake_method: str = "double-normal"


def shortest_brake_length(body: Body) -> Optional[float]:
    """가장 짧은 이중 법선 현의 길이. 반사 없이 양 끝에서 멈추는 brake 궤적입니다."""
    orbits = bouncing_ball_orbits(body)
    return 0.5 * orbits[0].length if orbits else None


def body_estimate(name: str, body: Body, strategy: str = "exact") -> BodyEstimate:
    return BodyEstimate(
        name=name,
        body=body,
        mu=estimate_mu_p(body, strategy),
        inradius=inradius(body).radius,
        width=width(body).width,
        brake_length=shortest_brake_length(body),
    )


def _aligned_witness(entry: BodyEstimate, partner) -> Optional[BouncePolygon]:
    """
    partner 증인이 bouncing ball 이면 같은 방향의 이중 법선 현을 entry 바디에서 만듭니다.
    그 현이 entry 의 최소 길이를 내는 반사 궤도일 때만 돌려줍니다.
    """
    P = _vertices(partner)
    if len(P) != 2 or entry.body.dim != P.shape[1]:
        return None
    u = P[1] - P[0]
    norm = np.linalg.norm(u)
    if norm == 0:
        return None
    u = u / norm
    poly = BouncePolygon(
        vertices=np.vstack([support_point(entry.body, -u), support_point(entry.body, u)])
    )
    if abs(poly.length - entry.mu.value) > EQUALITY_RTOL * entry.mu.value:
        return None
    if not verify_reflection(from_polygon(poly, entry.body), entry.body, tol=1e-6).passed:
        return None
    return poly


def witnesses_similar(ea: BodyEstimate, eb: BodyEstimate, tol: float = 1e-4) -> bool:
    """두 최소 궤도 증인 (또는 같은 길이의 정렬된 대체 증인) 이 평행이동·배율로 같은지."""
    wa, wb = ea.mu.trajectory, eb.mu.trajectory
    options = [(wa, wb), (_aligned_witness(ea, wb), wb), (wa, _aligned_witness(eb, wa))]
    return any(
        similar_up_to_translation_scaling(x, y, tol)
        for x, y in options
        if x is not None and y is not None
    )


def check_inequalities(
    entries: Sequence[BodyEstimate],
    pairs: Sequence[tuple] = (),
    nested: Sequence[tuple] = (),
) -> list:
    """
    바디별 μ_P 추정치로 부등식 보고서를 만듭니다.

    - ghomi: μ_P ≥ 4r, 등식은 2r = wid 이고 증인이 bouncing ball 일 때
    - short-bound: 2(n+1)r ≥ μ_P
    - brake-bound: 2n·r ≥ μ_B (brake 길이가 있을 때)
    - bounce-count: n+1 ≥ ♯B
    - brunn-minkowski: μ_P(K₁+K₂) ≥ μ_P(K₁) + μ_P(K₂) (pairs 의 (K₁, K₂, 합) 이름)
    - monotonicity: μ_P(K₂) ≥ μ_P(K₁) (nested 의 (안, 밖) 이름, 지지함수 지배 확인)

    Raises:
        IncompleteReport: 필요한 추정치가 없을 때
    """
    by_name = {e.name: e for e in entries}
    missing = [e.name for e in entries if e.mu is None]
    for group in list(pairs) + list(nested):
        missing += [name for name in group if name not in by_name]
    if missing:
        raise IncompleteReport("추정치가 없는 바디가 있습니다.", {"missing": sorted(set(missing))})

    reports = []
    for e in entries:
        n = e.body.dim
        mu = e.mu.value
        witness = e.mu.trajectory
        prov = {"mu": e.mu.method, "inradius": "chebyshev-lp", "width": "slab-search"}
        equality_expected = abs(2.0 * e.inradius - e.width) <= EQUALITY_RTOL * e.width
        is_bouncing = witness.bounce_count == 2
        ghomi = _report(
            "ghomi", e.name, mu, 4.0 * e.inradius, prov,
            equality_expected=bool(equality_expected), witness_bouncing_ball=bool(is_bouncing),
        )
        if ghomi.verdict == "equality-within-tol" and not (equality_expected and is_bouncing):
            ghomi = replace(ghomi, verdict="fails")
        reports.append(ghomi)
        reports.append(_report("short-bound", e.name, 2.0 * (n + 1) * e.inradius, mu, prov))
        reports.append(
            _report("bounce-count", e.name, n + 1, witness.bounce_count, {"bounces": e.mu.method})
        )
        if e.brake_length is not None:
            reports.append(
                _report(
                    "brake-bound", e.name, 2.0 * n * e.inradius, e.brake_length,
                    {"mu_B": e.brake_method, "inradius": "chebyshev-lp"},
                )
            )

    for a, b, s in pairs:
        ea, eb, es = by_name[a], by_name[b], by_name[s]
        similar = witnesses_similar(ea, eb)
        bm = _report(
            "brunn-minkowski", f"{a}+{b}", es.mu.value, ea.mu.value + eb.mu.value,
            {"sum": es.mu.method, "parts": [ea.mu.method, eb.mu.method]},
            witnesses_similar=bool(similar),
        )
        # 등식 판정은 증인이 닮았을 때만
        if bm.verdict == "equality-within-tol" and not similar:
            bm = replace(bm, verdict="holds")
        reports.append(bm)

    for inner, outer in nested:
        ei, eo = by_name[inner], by_name[outer]
        if not dominates(ei.body, eo.body):
            raise IncompleteReport(
                "포함 관계가 성립하지 않는 쌍입니다.", {"inner": inner, "outer": outer}
            )
        reports.append(
            _report(
                "monotonicity", f"{inner}⊆{outer}", eo.mu.value, ei.mu.value,
                {"inner": ei.mu.method, "outer": eo.mu.method},
            )
        )
    return reports


REPORT_COLUMNS = ["name", "subject", "lhs", "rhs", "slack", "verdict"]


def reports_to_csv(reports: Sequence[InequalityReport], path: str) -> str:
    """부등식 보고서 하나당 한 행의 CSV 표를 저장하고 경로를 돌려줍니다."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow([r.name, r.subject, repr(r.lhs), repr(r.rhs), repr(r.slack), r.verdict])
    return path
