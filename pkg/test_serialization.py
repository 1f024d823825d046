import json

import numpy as np
import pytest

from billiards.exact_billiard import BouncePolygon
from billiards.geometry import ball, ellipsoid, minkowski_sum, p_ball, support
from billiards.loopspace import diameter_loop
from billiards.serialization import (
    body_from_spec,
    body_to_spec,
    curve_from_dict,
    curve_to_dict,
    dump_json,
    load_body,
    resolve_body,
    trajectory_from_dict,
    trajectory_to_dict,
    write_curve_csv,
)
from billiards.trajectory import from_polygon, verify_reflection
from errors import ConfigError
from resources.body_zoo import BODIES_DIR, get_body_list, zoo_body

DISC = ball([0.0, 0.0], 1.0)


def test_body_spec_for_each_kind():
    bodies = [
        DISC,
        ellipsoid([1.0, 0.0], [2.0, 1.0]),
        p_ball([0.0, 0.0], [1.0, 2.0], 4),
        minkowski_sum(DISC, ellipsoid([0.0, 0.0], [2.0, 1.0])),
    ]
    for body in bodies:
        restored = body_from_spec(json.loads(json.dumps(body_to_spec(body))))
        assert restored == body


def test_invalid_body_specs():
    with pytest.raises(ConfigError):
        body_from_spec({"dim": 2, "kind": "cube", "params": {}})
    with pytest.raises(ConfigError):
        body_from_spec({"dim": 2, "kind": "ball", "params": {"center": [0, 0], "radius": -1}})
    with pytest.raises(ConfigError):
        load_body("/nonexistent/body.json")


def test_bundled_bodies_load():
    for name in get_body_list():
        body = zoo_body(name)
        assert body.dim in (2, 3)
    assert support(load_body(f"{BODIES_DIR}/ellipse_2_1.json"), [1.0, 0.0]) == pytest.approx(2.0)


def test_resolve_body_accepts_paths_and_dicts(tmp_path):
    path = dump_json(body_to_spec(DISC), str(tmp_path / "disc.json"))
    assert resolve_body(path) == DISC
    assert resolve_body(body_to_spec(DISC)) == DISC
    assert resolve_body(DISC) is DISC


def test_curve_header_is_checked():
    data = curve_to_dict(diameter_loop(DISC, 16))
    assert curve_from_dict(data).N == 16
    data["N"] = 17
    with pytest.raises(ConfigError):
        curve_from_dict(data)


def test_trajectory_file_keeps_reflection_quality(tmp_path):
    traj = from_polygon(BouncePolygon(vertices=[[-1.0, 0.0], [1.0, 0.0]]), DISC)
    path = dump_json(trajectory_to_dict(traj), str(tmp_path / "traj.json"))
    with open(path, encoding="utf-8") as f:
        restored = trajectory_from_dict(json.load(f))
    assert restored.total_length == pytest.approx(4.0)
    assert verify_reflection(restored, DISC).passed


def test_dump_json_is_deterministic(tmp_path):
    payload = {"b": np.arange(3), "a": np.float64(1.5)}
    first = open(dump_json(payload, str(tmp_path / "one.json")), encoding="utf-8").read()
    second = open(dump_json(payload, str(tmp_path / "two.json")), encoding="utf-8").read()
    assert first == second
    assert first.index('"a"') < first.index('"b"')


def test_curve_csv(tmp_path):
    path = write_curve_csv(diameter_loop(DISC, 16), str(tmp_path / "curve.csv"))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0] == "t,x1,x2"
    assert len(lines) == 17
