import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from billiards.geometry import Body, extent
from billiards.loopspace import (
    DiscreteCurve,
    CurveTangent,
    curve_distance,
    energy,
    grad_lagrangian,
    hess_lagrangian,
    laplacian_operator,
    potential_integral,
    w12_norm,
)
from billiards.penalty import PenaltyParams, barrier_terms
from config import (
    CONSERVATION_TOL,
    DEFAULT_TOLERANCE,
    EPS_RATIO,
    EPS_START,
    EPS_STEPS,
    WARM_START_RATIO,
    validate_eps_schedule,
)
from errors import (
    BilliardError,
    BrokenTrend,
    Collapsed,
    Diverged,
    DomainViolation,
    Escaped,
    InvalidArgument,
    NumericalFailure,
    OverflowGuard,
    with_epsilon,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    """
    임계점 탐색 옵션.

    tol 을 주지 않으면 DEFAULT_TOLERANCE × N 을 씁니다. mu_* 는 헤시안 스펙트럼 스케일의
    제곱에 대한 상대값입니다.
    """

    tol: Optional[float] = None
    max_iter: int = 200
    max_guard_rejections: int = 40
    mu_init: float = 1e-14
    mu_floor: float = 1e-18
    mu_max: float = 1e2
    fallback_halvings: int = 30
    collapse_energy: float = 1e-8
    eig_rtol: float = 1e-8

    def tolerance_for(self, curve: DiscreteCurve) -> float:
        return self.tol if self.tol is not None else DEFAULT_TOLERANCE * curve.N


@dataclass(frozen=True)
class CriticalPointRecord:
    curve: DiscreteCurve
    lagrangian_value: float
    grad_norm: float
    morse_index: int
    energy_value: float
    potential_integral: float
    epsilon: float
    delta: float
    nullity: int = 0
    w12_grad_norm: float = 0.0
    initial_grad_norm: float = 0.0
    iterations: int = 0

    @property
    def params(self) -> PenaltyParams:
        return PenaltyParams(delta=self.delta, epsilon=self.epsilon)

    @property
    def length_estimate(self) -> float:
        """√(2L_ε): 상수 속력 극한에서의 궤적 길이."""
        return float(np.sqrt(max(2.0 * self.lagrangian_value, 0.0)))


@dataclass
class ContinuationTrace:
    records: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self) -> CriticalPointRecord:
        if not self.records:
            raise InvalidArgument("빈 연속법 기록입니다.")
        return self.records[-1]

    @property
    def epsilons(self) -> list:
        return [r.epsilon for r in self.records]

    def potential_integrals(self) -> list:
        return [r.potential_integral for r in self.records]


def geometric_schedule(start: float = EPS_START, ratio: float = EPS_RATIO, steps: int = EPS_STEPS):
    """[start, start·ratio, …] 길이 steps 의 엄격히 감소하는 ε 스케줄."""
    if not start > 0 or not 0 < ratio < 1 or steps < 1:
        raise InvalidArgument(
            "ε 스케줄은 start > 0, 0 < ratio < 1, steps ≥ 1 이어야 합니다.",
            {"start": start, "ratio": ratio, "steps": steps},
        )
    return [start * ratio**k for k in range(steps)]


# ---------------------------------------------------------------------------
# 스펙트럼


def _spectrum(H: np.ndarray, rtol: float):
    try:
        lam = la.eigvalsh(H)
    except la.LinAlgError as e:
        raise NumericalFailure("고유값 분해에 실패했습니다.", {"message": str(e)}) from e
    scale = float(np.abs(lam).max()) if len(lam) else 0.0
    cut = rtol * scale
    index = int((lam < -cut).sum())
    nullity = int((np.abs(lam) <= cut).sum())
    return index, nullity, lam


def hessian_spectrum(rec: CriticalPointRecord, body: Body, rtol: float = 1e-8):
    """
    (모스 지수, 영공간 차원, 고유값). 스펙트럼 스케일의 rtol 배 이내 고유값은
    음수로 세지 않고 nullity 로 따로 보고합니다.
    """
    H = hess_lagrangian(rec.curve, body, rec.params).toarray()
    return _spectrum(0.5 * (H + H.T), rtol)


def morse_index(rec: CriticalPointRecord, body: Optional[Body] = None, rtol: float = 1e-8) -> int:
    """바디가 없으면 기록된 지수를, 있으면 헤시안을 다시 분해한 지수를 돌려줍니다."""
    if body is None:
        return rec.morse_index
    return hessian_spectrum(rec, body, rtol)[0]


def energy_profile(rec: CriticalPointRecord, body: Body) -> np.ndarray:
    """구간 중점에서의 |γ̇|²/2 + εU (보존량의 이산판)."""
    c = rec.curve
    U = barrier_terms(body, rec.delta, c.nodes).U
    if c.closed:
        U_mid = 0.5 * (U + np.roll(U, -1))
    else:
        U_mid = 0.5 * (U[:-1] + U[1:])
    kinetic = (c.segments() ** 2).sum(axis=1) / (2.0 * c.dt**2)
    return kinetic + rec.epsilon * U_mid


def conservation_defect(rec: CriticalPointRecord, body: Body) -> float:
    """energy_profile 의 상대 표준편차. 연속 극한의 임계점에서는 0 입니다."""
    profile = energy_profile(rec, body)
    scale = abs(profile.mean())
    return float(profile.std() / scale) if scale > 0 else float("inf")


# ---------------------------------------------------------------------------
# 임계점 탐색


def _try_gradient(curve: DiscreteCurve, body: Body, params: PenaltyParams):
    try:
        return grad_lagrangian(curve, body, params)
    except (DomainViolation, OverflowGuard) as e:
        logger.debug("trial step rejected: %s", e.kind)
        return None


def _fallback_step(curve, g, H, body, params, opts):
    """½‖g‖² 를 라플라시안 전처리 하강으로 한 번 줄입니다. 실패하면 (None, 가드 거부 수)."""
    grad_phi = H @ g
    P = (laplacian_operator(curve) + sp.identity(len(g))).tocsc()
    direction = -spla.spsolve(P, grad_phi)
    phi = 0.5 * float(g @ g)
    slope = float(grad_phi @ direction)
    step = 1.0
    guards = 0
    for _ in range(opts.fallback_halvings):
        trial = curve.with_nodes(curve.flat() + step * direction)
        tg = _try_gradient(trial, body, params)
        if tg is None:
            guards += 1
        elif 0.5 * tg.norm() ** 2 <= phi + 1e-4 * step * slope:
            return trial, tg
        step *= 0.5
    return None, guards


def _build_record(curve, g: CurveTangent, body, params, opts, iterations, g0_norm):
    potential = potential_integral(curve, body, params)
    kinetic = energy(curve)
    L = kinetic - potential
    H = hess_lagrangian(curve, body, params).toarray()
    index, nullity, _ = _spectrum(0.5 * (H + H.T), opts.eig_rtol)
    return CriticalPointRecord(
        curve=curve,
        lagrangian_value=L,
        grad_norm=g.norm(),
        morse_index=index,
        energy_value=L + 2.0 * potential,
        potential_integral=potential,
        epsilon=params.epsilon,
        delta=params.delta,
        nullity=nullity,
        w12_grad_norm=w12_norm(g),
        initial_grad_norm=g0_norm,
        iterations=iterations,
    )


def find_critical_point(
    seed: DiscreteCurve,
    body: Body,
    params: PenaltyParams,
    opts: Optional[SolverOptions] = None,
) -> CriticalPointRecord:
    """
    L_ε 의 임계점 (대개 안장점) 을 찾습니다.

    헤시안 H 의 고유분해 위에서 레벤버그–마쿼트 스텝 −Q diag(λ/(λ²+μ)) Qᵀ g 로
    ‖g‖ 를 줄이며, μ 가 상한을 넘도록 진전이 없으면 ½‖g‖² 의 라플라시안 전처리
    하강 스텝으로 넘어갑니다. 시험 곡선이 내부를 벗어나거나 h_δ 가 언더플로 하한에
    닿으면 스텝을 거부하고 μ 를 키웁니다.

    Raises:
        Collapsed: 에너지가 collapse_energy 미만 (상수 루프)
        Diverged: 반복 상한 또는 정체
        Escaped: 언더플로/영역 위반으로 인한 거부가 반복될 때
    """
    opts = opts or SolverOptions()
    tol = opts.tolerance_for(seed)
    curve = seed
    if energy(curve) < opts.collapse_energy:
        raise Collapsed(
            "상수 곡선으로 붕괴했습니다.", {"energy": energy(curve), "epsilon": params.epsilon}
        )
    g = grad_lagrangian(curve, body, params)
    g0_norm = g.norm()
    mu_rel = opts.mu_init
    guard_hits = 0
    logger.info(
        "critical point search: N=%d closed=%s eps=%.3e |g0|=%.3e",
        curve.N, curve.closed, params.epsilon, g0_norm,
    )

    for it in range(opts.max_iter):
        if g.norm() <= tol:
            break
        H = hess_lagrangian(curve, body, params).toarray()
        H = 0.5 * (H + H.T)
        lam, Q = la.eigh(H)
        scale2 = float(np.max(lam**2)) or 1.0
        coeff = Q.T @ g.flat()
        accepted = False
        while not accepted:
            mu = mu_rel * scale2
            step = -Q @ (lam / (lam**2 + mu) * coeff)
            trial = curve.with_nodes(curve.flat() + step)
            tg = _try_gradient(trial, body, params)
            if tg is None:
                guard_hits += 1
                if guard_hits > opts.max_guard_rejections:
                    raise Escaped(
                        "스텝이 반복해서 경계 가드에 막혔습니다.",
                        {"iterations": it, "rejections": guard_hits, "grad_norm": g.norm()},
                    )
                mu_rel *= 10.0
            elif tg.norm() < g.norm():
                curve, g = trial, tg
                mu_rel = max(mu_rel / 10.0, opts.mu_floor)
                guard_hits = 0
                accepted = True
            else:
                mu_rel *= 10.0
            if not accepted and mu_rel > opts.mu_max:
                trial, tg = _fallback_step(curve, g.flat(), H, body, params, opts)
                if trial is None:
                    if guard_hits + tg > opts.max_guard_rejections:
                        raise Escaped(
                            "줄어드는 스텝이 반복해서 경계 가드에 막혔습니다.",
                            {"iterations": it, "rejections": guard_hits + tg},
                        )
                    raise Diverged(
                        "가우스–뉴턴과 전처리 하강 모두 진전이 없습니다.",
                        {"iterations": it, "grad_norm": g.norm(), "tol": tol},
                    )
                logger.warning("LM stalled at |g|=%.3e; preconditioned descent step", g.norm())
                curve, g = trial, tg
                guard_hits = 0
                mu_rel = opts.mu_init
                accepted = True
        logger.debug("iter %d |g|=%.3e mu_rel=%.1e", it, g.norm(), mu_rel)
    else:
        if g.norm() > tol:
            raise Diverged(
                "반복 상한에 도달했습니다.",
                {"iterations": opts.max_iter, "grad_norm": g.norm(), "tol": tol},
            )

    if energy(curve) < opts.collapse_energy:
        raise Collapsed("상수 곡선으로 수렴했습니다.", {"energy": energy(curve)})
    rec = _build_record(curve, g, body, params, opts, it, g0_norm)
    logger.info(
        "converged: eps=%.3e L=%.10g E=%.10g index=%d in %d iterations",
        params.epsilon, rec.lagrangian_value, rec.energy_value, rec.morse_index, it,
    )
    return rec


# ---------------------------------------------------------------------------
# ε → 0 연속법


def _diagnose(trace: ContinuationTrace, body: Body, window, jump_tol: float) -> dict:
    recs = trace.records
    potentials = [r.potential_integral for r in recs]
    energies = [r.energy_value for r in recs]
    values = [r.lagrangian_value for r in recs]
    if window is None:
        window = (0.5 * values[0], 2.0 * values[0])
    a, b = window
    jumps = [curve_distance(p.curve, q.curve) for p, q in zip(recs, recs[1:])]
    jump_limit = jump_tol * extent(body)
    warm = [
        q.initial_grad_norm / max(p.grad_norm, 1e-300) for p, q in zip(recs, recs[1:])
    ]
    indices = [r.morse_index for r in recs]
    conservation = [conservation_defect(r, body) for r in recs]
    energy_change = (
        abs(energies[-1] - energies[-2]) / max(abs(energies[-1]), 1e-300)
        if len(energies) > 1 else None
    )
    return {
        "potential_integrals": potentials,
        "potential_ratio": potentials[-1] / max(energies[-1], 1e-300),
        "energy_values": energies,
        "energy_change": energy_change,
        "window": [a, b],
        "window_ok": [a <= v <= b for v in values],
        "conservation": conservation,
        "conservation_ok": [x <= CONSERVATION_TOL for x in conservation],
        "warm_start_ratios": warm,
        "warm_start_ok": all(w <= WARM_START_RATIO for w in warm),
        "curve_jumps": jumps,
        "discontinuities": [i + 1 for i, j in enumerate(jumps) if j > jump_limit],
        "morse_indices": indices,
        "index_stable": len(indices) >= 3 and len(set(indices[-3:])) == 1,
    }


def continue_to_zero(
    seed: DiscreteCurve,
    body: Body,
    delta: float,
    schedule: Sequence[float],
    opts: Optional[SolverOptions] = None,
    window: Optional[tuple] = None,
    jump_tol: float = 0.25,
) -> ContinuationTrace:
    """
    감소하는 ε 스케줄을 따라 이전 임계점에서 웜 스타트하며 L_ε 의 임계점을 추적합니다.

    각 단계의 힘 밀도 2εh(γ)⁻³ 을 profiles 에, 포텐셜 적분 추세·에너지 수렴·
    [a, b] 창·웜 스타트 비율·곡선 불연속을 diagnostics 에 기록합니다.

    Raises:
        InvalidArgument: 스케줄이 비었거나 감소하지 않을 때
        BrokenTrend: 포텐셜 적분이 3번 연속 증가할 때
        BilliardError: 솔버 오류 (details["epsilon"] 에 실패한 ε)
    """
    schedule = [float(e) for e in schedule]
    ok, message = validate_eps_schedule(schedule)
    if not ok:
        raise InvalidArgument(message, {"schedule": schedule})

    trace = ContinuationTrace()
    current = seed
    increases = 0
    for eps in schedule:
        params = PenaltyParams(delta=delta, epsilon=eps)
        try:
            rec = find_critical_point(current, body, params, opts)
        except BilliardError as e:
            logger.error("continuation failed at eps=%.3e: %s", eps, e.message)
            raise with_epsilon(e, eps)
        if trace.records and rec.potential_integral > trace.records[-1].potential_integral:
            increases += 1
        else:
            increases = 0
        trace.records.append(rec)
        trace.profiles.append(barrier_terms(body, delta, rec.curve.nodes).force_density(eps))
        if increases >= 3:
            raise BrokenTrend(
                "포텐셜 적분이 3번 연속 증가했습니다.",
                {"epsilon": eps, "potential_integrals": trace.potential_integrals()},
            )
        current = rec.curve

    trace.diagnostics = _diagnose(trace, body, window, jump_tol)
    logger.info(
        "continuation done: %d steps, final eps=%.3e, potential ratio %.3e",
        len(trace.records), schedule[-1], trace.diagnostics["potential_ratio"],
    )
    return trace
