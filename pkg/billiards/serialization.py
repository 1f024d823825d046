import csv
import dataclasses
import json
import logging
import os
from typing import Any

import numpy as np

from billiards.exact_billiard import BouncePolygon
from billiards.geometry import Body, ball, ellipsoid, minkowski_sum, p_ball
from billiards.loopspace import DiscreteCurve
from billiards.saddle import ContinuationTrace, CriticalPointRecord
from billiards.trajectory import BilliardTrajectory, Segment
from config import DEFAULT_TOLERANCE, validate_body_spec
from errors import ConfigError

logger = logging.getLogger(__name__)


def to_jsonable(obj: Any) -> Any:
    """numpy 배열과 데이터클래스를 JSON 으로 쓸 수 있는 값으로 바꿉니다."""
    if isinstance(obj, DiscreteCurve):
        return curve_to_dict(obj)
    if isinstance(obj, Body):
        return body_to_spec(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dump_json(obj: Any, path: str) -> str:
    """키를 정렬해 저장합니다. 같은 입력은 바이트 단위로 같은 파일을 만듭니다."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_jsonable(obj), f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.debug("wrote %s", path)
    return path


def load_json(path: str) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


# ---------------------------------------------------------------------------
# 바디 스펙


def body_to_spec(body: Body) -> dict:
    if body.kind == "minkowski_sum":
        params = {"summands": [body_to_spec(b) for b in body.summands]}
    else:
        params = {"center": list(body.center)}
        if body.kind == "ball":
            params["radius"] = body.radius
        elif body.kind == "ellipsoid":
            params["semi_axes"] = list(body.semi_axes)
        else:
            params["scale"] = list(body.scale)
            params["p"] = body.p
    return {"dim": body.dim, "kind": body.kind, "params": params, "tolerance": body.tolerance}


def body_from_spec(spec: Any) -> Body:
    """
    JSON 바디 스펙을 Body 로 바꿉니다.

    Raises:
        ConfigError: 스펙 형식 오류
    """
    ok, message = validate_body_spec(spec)
    if not ok:
        raise ConfigError(message, {"spec": spec})
    dim = spec["dim"]
    params = spec["params"]
    tol = float(spec.get("tolerance", DEFAULT_TOLERANCE))
    center = [float(x) for x in params.get("center", [0.0] * dim)]
    kind = spec["kind"]
    if kind == "ball":
        return ball(center, float(params["radius"]), tolerance=tol)
    if kind == "ellipsoid":
        return ellipsoid(center, [float(a) for a in params["semi_axes"]], tolerance=tol)
    if kind == "p-ball":
        return p_ball(center, [float(s) for s in params["scale"]], int(params["p"]), tolerance=tol)
    summands = [body_from_spec(s) for s in params["summands"]]
    body = summands[0]
    for other in summands[1:]:
        body = minkowski_sum(body, other)
    return body


def load_body(path: str) -> Body:
    try:
        spec = load_json(path)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"바디 스펙을 읽을 수 없습니다: {path}", {"reason": str(e)})
    return body_from_spec(spec)


# ---------------------------------------------------------------------------
# 곡선, 기록, 궤적


def curve_to_dict(c: DiscreteCurve) -> dict:
    return {"n": c.dim, "N": c.N, "closed": c.closed, "nodes": c.nodes.tolist()}


def curve_from_dict(data: dict) -> DiscreteCurve:
    nodes = np.asarray(data["nodes"], dtype=float)
    if nodes.shape != (data["N"], data["n"]):
        raise ConfigError(
            "곡선 헤더와 노드 배열의 크기가 다릅니다.",
            {"header": [data["N"], data["n"]], "shape": list(nodes.shape)},
        )
    return DiscreteCurve(nodes=nodes, closed=bool(data["closed"]))


def record_to_dict(rec: CriticalPointRecord) -> dict:
    data = to_jsonable(rec)
    data["length_estimate"] = rec.length_estimate
    return data


def record_from_dict(data: dict) -> CriticalPointRecord:
    names = {f.name for f in dataclasses.fields(CriticalPointRecord)}
    values = {k: v for k, v in data.items() if k in names}
    values["curve"] = curve_from_dict(data["curve"])
    return CriticalPointRecord(**values)


def trace_to_dict(trace: ContinuationTrace) -> dict:
    return {
        "records": [record_to_dict(r) for r in trace.records],
        "profiles": to_jsonable(trace.profiles),
        "diagnostics": to_jsonable(trace.diagnostics),
    }


def trace_from_dict(data: dict) -> ContinuationTrace:
    return ContinuationTrace(
        records=[record_from_dict(r) for r in data["records"]],
        profiles=[np.asarray(p, dtype=float) for p in data["profiles"]],
        diagnostics=dict(data.get("diagnostics", {})),
    )


def trajectory_to_dict(traj: BilliardTrajectory) -> dict:
    data = to_jsonable(traj)
    data["vertices"] = traj.vertices.tolist()
    data["bounce_count"] = traj.bounce_count
    return data


def trajectory_from_dict(data: dict) -> BilliardTrajectory:
    segments = [
        Segment(
            start=np.asarray(s["start"], dtype=float),
            end=np.asarray(s["end"], dtype=float),
            direction=np.asarray(s["direction"], dtype=float),
        )
        for s in data["segments"]
    ]
    endpoints = data.get("endpoints")
    return BilliardTrajectory(
        kind=data["kind"],
        bounce_times=np.asarray(data["bounce_times"], dtype=float),
        bounce_points=np.asarray(data["bounce_points"], dtype=float),
        segments=segments,
        speed=float(data["speed"]),
        total_length=float(data["total_length"]),
        endpoints=None if endpoints is None else np.asarray(endpoints, dtype=float),
        straightness=float(data.get("straightness", 0.0)),
        extra=dict(data.get("extra", {})),
    )


def polygon_to_dict(poly: BouncePolygon) -> dict:
    data = to_jsonable(poly)
    data["k"] = poly.k
    data["length"] = poly.length
    return data


# ---------------------------------------------------------------------------
# CSV


def write_curve_csv(c: DiscreteCurve, path: str) -> str:
    """노드 하나당 한 행: t, x_1, …, x_n."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["t"] + [f"x{k + 1}" for k in range(c.dim)])
        for t, x in zip(c.times, c.nodes):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in x])
    return path


def write_rows_csv(rows: list, path: str) -> str:
    """dict 행 목록을 첫 행의 키 순서대로 저장합니다."""
    if not rows:
        raise ConfigError("저장할 행이 없습니다.", {"path": path})
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return path


def resolve_body(source: Any) -> Body:
    """Body, 스펙 dict, 스펙 JSON 경로 중 무엇이든 Body 로 바꿉니다."""
    if isinstance(source, Body):
        return source
    if isinstance(source, str):
        return load_body(source)
    return body_from_spec(source)
