# main.py
import argparse
import logging
import sys

from config import (
    DEFAULT_NODES,
    DEFAULT_TOLERANCE,
    DEFAULT_WORKERS,
    LOG_LEVEL,
    OUTPUT_DIR,
    VALID_MODES,
    parse_eps_schedule,
    setup_logging,
)
from errors import STATUS_CONFIG
from harness import RunConfig, run

logger = logging.getLogger("billiards")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="billiards",
        description="볼록 바디 안의 당구 궤적: 벌점 연속법, 사격법, 검증, 부등식 검사",
    )
    parser.add_argument("mode", nargs="?", choices=VALID_MODES, default="report",
                        help="실행 모드 (--suite 와 함께 쓰면 무시)")
    parser.add_argument("--body", action="append", default=[],
                        help="바디 이름 또는 스펙 JSON 경로 (여러 번 지정 가능)")
    parser.add_argument("--out", default=OUTPUT_DIR, help="산출물 디렉토리")
    parser.add_argument("--eps-schedule", default=None,
                        help="ε 스케줄: 'start:ratio:steps' (예: 1e-1:0.5:13)")
    parser.add_argument("--nodes", type=int, default=DEFAULT_NODES, help="곡선 이산화 노드 수")
    parser.add_argument("--seed", type=int, default=0, help="난수 시드")
    parser.add_argument("--svg", action="store_true", help="SVG 그림 저장")
    parser.add_argument("--suite", default=None, help="번들 검사 묶음 (acceptance)")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="로그 레벨")
    parser.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="동시 실행 수")
    parser.add_argument("--k", type=int, action="append", default=None,
                        help="shoot 반사 횟수 (여러 번 지정 가능)")
    parser.add_argument("--j", type=int, default=1, help="shoot 회전수")
    parser.add_argument("--strategy", default="exact", choices=["exact", "penalty", "all"],
                        help="μ_P 후보 탐색 방식")
    parser.add_argument("--trajectory", default=None, help="verify 할 궤적 JSON 경로")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE,
                        help="verify 반사 잔차 허용오차 (벌점 궤적은 1e-3)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    Raises:
        ValueError: ε 스케줄 형식 오류
    """
    schedule = parse_eps_schedule(args.eps_schedule) if args.eps_schedule else None
    return RunConfig(
        mode=args.mode,
        bodies=args.body,
        out_dir=args.out,
        nodes=args.nodes,
        eps_schedule=schedule,
        rng_seed=args.seed,
        svg=args.svg,
        workers=args.workers,
        k_values=args.k or [2, 3],
        j=args.j,
        strategy=args.strategy,
        trajectory=args.trajectory,
        tolerance=args.tol,
        suite=args.suite,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        cfg = config_from_args(args)
    except ValueError as e:
        logger.error("설정 오류: %s", e)
        return STATUS_CONFIG
    logger.info("billiards %s 시작 (bodies=%s, out=%s)", cfg.suite or cfg.mode, cfg.bodies,
                cfg.out_dir)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
