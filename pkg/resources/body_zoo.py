import os
from typing import Dict

from billiards.geometry import Body, ball, ellipsoid, minkowski_sum, p_ball
from billiards.serialization import load_body

BODIES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "bodies")


def _zoo() -> Dict[str, Body]:
    disc = ball([0.0, 0.0], 1.0)
    disc_r2 = ball([0.0, 0.0], 2.0)
    ellipse = ellipsoid([0.0, 0.0], [2.0, 1.0])
    pball = p_ball([0.0, 0.0], [1.0, 1.0], 4)
    return {
        "disc": disc,
        "disc_r2": disc_r2,
        "ellipse_2_1": ellipse,
        "pball_4": pball,
        "ellipse_plus_disc": minkowski_sum(ellipse, disc),
        "disc_plus_disc_r2": minkowski_sum(disc, disc_r2),
        "ellipse_plus_ellipse": minkowski_sum(ellipse, ellipse),
        "disc_plus_pball": minkowski_sum(disc, pball),
        "ellipse_plus_pball": minkowski_sum(ellipse, pball),
    }


ZOO = _zoo()

# 단일 바디 검사 대상 (Ghomi, 짧은 궤도 상한)
ACCEPTANCE_BODIES = ["disc", "ellipse_2_1", "pball_4", "ellipse_plus_disc"]

# (K₁, K₂, K₁+K₂)
BRUNN_MINKOWSKI_PAIRS = [
    ("disc", "disc_r2", "disc_plus_disc_r2"),
    ("disc", "ellipse_2_1", "ellipse_plus_disc"),
    ("ellipse_2_1", "ellipse_2_1", "ellipse_plus_ellipse"),
    ("disc", "pball_4", "disc_plus_pball"),
    ("ellipse_2_1", "pball_4", "ellipse_plus_pball"),
]

# (안쪽, 바깥쪽)
NESTED_PAIRS = [
    ("disc", "disc_r2"),
    ("disc", "ellipse_2_1"),
    ("disc", "pball_4"),
    ("ellipse_2_1", "ellipse_plus_disc"),
    ("pball_4", "ellipse_plus_disc"),
]


def zoo_body(name: str) -> Body:
    """이름으로 zoo 바디를 찾고, 없으면 resources/bodies/<name>.json 을 읽습니다."""
    if name in ZOO:
        return ZOO[name]
    return load_body(os.path.join(BODIES_DIR, f"{name}.json"))


def get_body_list() -> list[str]:
    """zoo 와 번들 JSON 바디 이름 목록."""
    bundled = [f[:-5] for f in os.listdir(BODIES_DIR) if f.endswith(".json")]
    return sorted(set(ZOO) | set(bundled))
