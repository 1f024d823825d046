import asyncio
import glob
import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from billiards.serialization import dump_json, load_body, load_json
from billiards.variational import mu_p_ball
from config import (
    DEFAULT_NODES,
    DEFAULT_TOLERANCE,
    DEFAULT_WORKERS,
    OUTPUT_DIR,
    VALID_MODES,
    is_valid_mode,
    parse_eps_schedule,
    validate_eps_schedule,
)
from errors import STATUS_CHECK, STATUS_CONFIG, STATUS_SOLVER, ConfigError, IncompleteReport
from reports.summary import headline, render
from resources.body_zoo import BRUNN_MINKOWSKI_PAIRS, NESTED_PAIRS, zoo_body
from tools import bounded_gather
from tools.body_geometry import body_geometry
from tools.check_inequalities import check_inequalities
from tools.generate_continuation_chart import generate_continuation_chart
from tools.shoot_orbits import shoot_orbits
from tools.solve_brake import solve_brake
from tools.solve_periodic import solve_periodic
from tools.verify_trajectory import verify_trajectory

logger = logging.getLogger(__name__)

ACCEPTANCE_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), "resources",
                                 "acceptance.json")


@dataclass
class RunConfig:
    """
    한 번의 실행 설정. CLI 플래그가 환경 변수 기본값보다 우선합니다.

    bodies 는 zoo 이름이나 바디 스펙 JSON 경로의 목록입니다.
    """

    mode: str
    bodies: list = field(default_factory=list)
    out_dir: str = OUTPUT_DIR
    nodes: int = DEFAULT_NODES
    eps_schedule: Optional[list] = None
    rng_seed: int = 0
    svg: bool = False
    workers: int = DEFAULT_WORKERS
    k_values: list = field(default_factory=lambda: [2, 3])
    j: int = 1
    strategy: str = "exact"
    trajectory: Optional[str] = None
    tolerance: float = DEFAULT_TOLERANCE
    suite: Optional[str] = None
    brake_lengths: Optional[dict] = None

    def validate(self) -> None:
        """
        Raises:
            ConfigError: 설정 오류
        """
        if self.suite is not None:
            if self.suite != "acceptance":
                raise ConfigError(f"알 수 없는 suite: {self.suite}", {"valid": ["acceptance"]})
            return
        if not is_valid_mode(self.mode):
            raise ConfigError(f"mode 는 {VALID_MODES} 중 하나여야 합니다.", {"mode": self.mode})
        if self.mode not in ("report",) and not self.bodies:
            raise ConfigError("--body 가 하나 이상 필요합니다.")
        if self.mode == "verify" and not self.trajectory:
            raise ConfigError("verify 모드에는 --trajectory 가 필요합니다.")
        if self.nodes < 8:
            raise ConfigError(f"노드 수는 8 이상이어야 합니다: {self.nodes}")
        if self.workers < 1:
            raise ConfigError(f"workers 는 1 이상이어야 합니다: {self.workers}")
        if not self.tolerance > 0:
            raise ConfigError(f"허용오차는 양수여야 합니다: {self.tolerance}")
        if self.eps_schedule is not None:
            ok, message = validate_eps_schedule(self.eps_schedule)
            if not ok:
                raise ConfigError(message, {"schedule": self.eps_schedule})
        if self.strategy not in ("exact", "penalty", "all"):
            raise ConfigError(f"알 수 없는 strategy: {self.strategy}")


def resolve_named_body(name: str):
    """경로가 있으면 스펙 JSON 을, 아니면 zoo 이름으로 바디를 찾습니다."""
    if os.path.isfile(name):
        return load_body(name)
    return zoo_body(name)


def body_label(name: str) -> str:
    return os.path.splitext(os.path.basename(name))[0]


# ---------------------------------------------------------------------------
# 파이프라인 실행


async def _run_body(cfg: RunConfig, name: str) -> dict:
    body = resolve_named_body(name)
    label = f"{cfg.mode}_{body_label(name)}"
    if cfg.mode == "shoot":
        label += f"_j{cfg.j}"
    out_dir = cfg.out_dir
    if cfg.mode == "solve":
        result = await solve_periodic(
            body, nodes=cfg.nodes, eps_schedule=cfg.eps_schedule, perturb=0.0,
            rng_seed=cfg.rng_seed, out_dir=out_dir, name=label, svg=cfg.svg,
        )
    elif cfg.mode == "brake":
        result = await solve_brake(
            body, nodes=cfg.nodes, eps_schedule=cfg.eps_schedule, out_dir=out_dir, name=label,
            svg=cfg.svg,
        )
    elif cfg.mode == "shoot":
        result = await shoot_orbits(
            body, k_values=cfg.k_values, j=cfg.j, workers=cfg.workers, out_dir=out_dir,
            name=label, svg=cfg.svg,
        )
    elif cfg.mode == "verify":
        result = await verify_trajectory(cfg.trajectory, body, tol=cfg.tolerance)
        if "error" not in result:
            dump_json(result, os.path.join(out_dir, f"{label}.json"))
    else:
        result = await body_geometry(body)
        if "error" not in result:
            dump_json(result, os.path.join(out_dir, f"{label}.json"))
    if cfg.svg and cfg.mode in ("solve", "brake") and "error" not in result:
        await generate_continuation_chart(
            result, out_dir=out_dir, filename=f"{label}_continuation.svg"
        )
    result["label"] = label
    return result


async def _run_inequalities(cfg: RunConfig) -> dict:
    bodies = {body_label(n): resolve_named_body(n) for n in cfg.bodies}
    pairs = [p for p in BRUNN_MINKOWSKI_PAIRS if all(x in bodies for x in p)]
    nested = [p for p in NESTED_PAIRS if all(x in bodies for x in p)]
    result = await check_inequalities(
        bodies, pairs, nested, strategy=cfg.strategy, brake_lengths=cfg.brake_lengths,
        workers=cfg.workers,
        out_dir=cfg.out_dir, name="inequalities",
    )
    result["label"] = "inequalities"
    return result


async def run_pipeline(cfg: RunConfig) -> list:
    """설정된 모드를 실행하고 결과 dict 목록을 돌려줍니다 (실패도 오류 dict 로 포함)."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    if cfg.mode == "inequalities":
        return [await _run_inequalities(cfg)]

    def factory(name):
        async def run():
            try:
                return await _run_body(cfg, name)
            except ConfigError as e:
                return {**e.to_response(), "label": body_label(name)}

        return run

    return await bounded_gather([factory(n) for n in cfg.bodies], cfg.workers)


def exit_status(results: list) -> int:
    """설정 오류 2, 솔버 실패 3, 검사 실패 1, 모두 통과 0."""
    statuses = {r["error"].get("status", STATUS_SOLVER) for r in results if "error" in r}
    if STATUS_CONFIG in statuses:
        return STATUS_CONFIG
    if STATUS_SOLVER in statuses:
        return STATUS_SOLVER
    if statuses or not all(r.get("passed", r.get("success", False)) for r in results):
        return STATUS_CHECK
    return 0


# ---------------------------------------------------------------------------
# acceptance suite


def _expect_length(result: dict, expected: float, tol: float) -> dict:
    if "error" in result:
        return result
    error = abs(result["length"] - expected)
    result["expected"] = {"length": expected, "error": error, "tol": tol}
    result["passed"] = bool(result["passed"] and error <= tol)
    return result


def _expect_closed_forms(result: dict, radius: float, tol: float) -> dict:
    if "error" in result:
        return result
    worst = 0.0
    for orbit in result["orbits"]:
        orbit["closed_form"] = mu_p_ball(radius, orbit["k"], orbit["j"])
        worst = max(worst, abs(orbit["length"] - orbit["closed_form"]))
    result["expected"] = {"max_error": worst, "tol": tol}
    result["passed"] = bool(result["passed"] and worst <= tol)
    return result


async def run_acceptance(base: RunConfig, config_path: str = ACCEPTANCE_CONFIG) -> list:
    """번들 설정 파일 하나로 acceptance 파이프라인 전체를 돌립니다."""
    try:
        suite = load_json(config_path)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"acceptance 설정을 읽을 수 없습니다: {config_path}", {"reason": str(e)})
    results = []

    shoot = suite["shoot"]
    for j in shoot["j_values"]:
        cfg = replace(base, mode="shoot", bodies=shoot["bodies"], k_values=shoot["k_values"], j=j)
        for r in await run_pipeline(cfg):
            results.append(_expect_closed_forms(r, shoot["radius"], shoot["length_tol"]))

    brake_lengths = {}
    for mode in ("solve", "brake"):
        section = suite[mode]
        cfg = replace(
            base, mode=mode, bodies=section["bodies"], nodes=section["nodes"],
            eps_schedule=parse_eps_schedule(section["eps_schedule"]),
        )
        for r in await run_pipeline(cfg):
            results.append(_expect_length(r, section["expected_length"], section["length_tol"]))
            if mode == "brake" and "error" not in r:
                brake_lengths[r["label"].removeprefix("brake_")] = r["length"]

    cfg = replace(base, mode="geom", bodies=suite["geom"]["bodies"])
    results += await run_pipeline(cfg)

    section = suite["inequalities"]
    cfg = replace(
        base, mode="inequalities", bodies=section["bodies"], strategy=section["strategy"],
        brake_lengths=brake_lengths,
    )
    results += await run_pipeline(cfg)
    return results


# ---------------------------------------------------------------------------
# 진입점


def run(cfg: RunConfig) -> int:
    """
    설정을 검증하고 파이프라인을 실행한 뒤 요약을 기록하고 종료 상태를 돌려줍니다.

    Returns:
        int: 0 모두 통과, 1 검사 실패, 2 설정 오류, 3 솔버 실패
    """
    try:
        cfg.validate()
        if cfg.mode == "report" and cfg.suite is None:
            print(report(cfg.out_dir))
            return 0
        if cfg.suite == "acceptance":
            results = asyncio.run(run_acceptance(cfg))
        else:
            results = asyncio.run(run_pipeline(cfg))
    except ConfigError as e:
        logger.error("설정 오류: %s", e.message)
        print(render(e.to_response()))
        return STATUS_CONFIG
    except IncompleteReport as e:
        logger.error("보고서 생성 실패: %s", e.message)
        print(render(e.to_response()))
        return STATUS_CHECK

    status = exit_status(results)
    summary = {
        "status": status,
        "results": [
            {"label": r.get("label"), "headline": headline(r), "passed": r.get("passed", False)}
            for r in results
        ],
    }
    dump_json(summary, os.path.join(cfg.out_dir, "summary.json"))
    for r in results:
        print(render(r))
        print()
    logger.info("실행 완료: status %d, %d results", status, len(results))
    return status


def report(out_dir: str) -> str:
    """
    out_dir 의 JSON 산출물을 모두 읽어 표로 렌더링합니다.

    Raises:
        IncompleteReport: 읽을 산출물이 없을 때
    """
    paths = sorted(
        p for p in glob.glob(os.path.join(out_dir, "*.json"))
        if os.path.basename(p) != "summary.json"
    )
    sections = []
    for path in paths:
        data: Any = load_json(path)
        if isinstance(data, dict) and ("mode" in data or "error" in data):
            sections.append(f"# {os.path.basename(path)}\n\n{render(data)}")
    if not sections:
        raise IncompleteReport("보고서로 만들 산출물이 없습니다.", {"out_dir": out_dir})
    return "\n\n".join(sections)

