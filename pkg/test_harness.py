"""
CLI, 실행 하네스, 비동기 툴 테스트
"""
import asyncio
import dataclasses
import json
import math
import os

import pytest

from billiards.exact_billiard import BouncePolygon
from billiards.geometry import ball
from billiards.loopspace import diameter_loop
from billiards.saddle import ContinuationTrace, CriticalPointRecord
from billiards.serialization import body_to_spec, trajectory_to_dict
from billiards.trajectory import from_polygon, verify_reflection
from errors import ConfigError, IncompleteReport
from harness import RunConfig, exit_status, report, resolve_named_body, run
from main import main
from resources.body_zoo import zoo_body
from tools.body_geometry import body_geometry
from tools.check_inequalities import check_inequalities
from tools.shoot_orbits import shoot_orbits
from tools.solve_brake import solve_brake
from tools.solve_periodic import (
    check_warnings,
    checks_passed,
    continuation_checks,
    solve_periodic,
)
from tools.verify_trajectory import verify_trajectory

DISC = ball([0.0, 0.0], 1.0)
ACCEPTANCE_SCHEDULE = [1e-1 * 0.5**k for k in range(20)]


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(mode="bogus", bodies=["disc"]).validate()
    with pytest.raises(ConfigError):
        RunConfig(mode="solve").validate()
    with pytest.raises(ConfigError):
        RunConfig(mode="solve", bodies=["disc"], eps_schedule=[]).validate()
    with pytest.raises(ConfigError):
        RunConfig(mode="verify", bodies=["disc"]).validate()
    with pytest.raises(ConfigError):
        RunConfig(mode="solve", bodies=["disc"], suite="nightly").validate()
    RunConfig(mode="report").validate()


def test_empty_schedule_is_config_error(tmp_path):
    cfg = RunConfig(mode="solve", bodies=["disc"], eps_schedule=[], out_dir=str(tmp_path))
    assert run(cfg) == 2
    assert main(["solve", "--body", "disc", "--eps-schedule", "1e-1:0.5:0",
                 "--out", str(tmp_path)]) == 2
    assert main(["solve", "--body", "disc", "--eps-schedule", "nonsense"]) == 2


def test_resolve_named_body(tmp_path):
    assert resolve_named_body("disc") == zoo_body("disc")
    path = tmp_path / "unit.json"
    path.write_text(json.dumps(body_to_spec(DISC)), encoding="utf-8")
    assert resolve_named_body(str(path)) == DISC
    with pytest.raises(ConfigError):
        resolve_named_body("no_such_body")


def test_exit_status_priority():
    ok = {"success": True, "passed": True}
    failed_check = {"success": True, "passed": False}
    config = {"error": {"status": 2, "message": "bad"}}
    solver = {"error": {"status": 3, "message": "diverged"}}
    assert exit_status([ok]) == 0
    assert exit_status([ok, failed_check]) == 1
    assert exit_status([failed_check, solver]) == 3
    assert exit_status([solver, config]) == 2


def test_shoot_run_and_report(tmp_path):
    out = str(tmp_path)
    status = main(["shoot", "--body", "disc", "--k", "3", "--k", "4", "--out", out, "--svg"])
    assert status == 0
    with open(os.path.join(out, "shoot_disc_j1.json"), encoding="utf-8") as f:
        artifact = json.load(f)
    lengths = {o["k"]: o["length"] for o in artifact["orbits"]}
    assert lengths[3] == pytest.approx(3 * math.sqrt(3), abs=1e-8)
    assert lengths[4] == pytest.approx(4 * math.sqrt(2), abs=1e-8)
    assert os.path.exists(os.path.join(out, "shoot_disc_j1_k3.svg"))
    with open(os.path.join(out, "summary.json"), encoding="utf-8") as f:
        assert json.load(f)["status"] == 0

    text = report(out)
    assert "## shoot" in text
    assert main(["report", "--out", out]) == 0


def test_report_needs_artifacts(tmp_path):
    with pytest.raises(IncompleteReport):
        report(str(tmp_path))
    assert main(["report", "--out", str(tmp_path)]) == 1


def test_verify_mode_on_shoot_artifact(tmp_path):
    out = str(tmp_path)
    assert main(["shoot", "--body", "ellipse_2_1", "--k", "2", "--out", out]) == 0
    artifact = os.path.join(out, "shoot_ellipse_2_1_j1.json")
    assert main(["verify", "--body", "ellipse_2_1", "--trajectory", artifact,
                 "--tol", "1e-8", "--out", out]) == 0


def test_body_geometry_tool():
    result = asyncio.run(body_geometry(zoo_body("ellipse_2_1")))
    assert result["success"]
    assert result["width"] == pytest.approx(2.0, abs=1e-9)
    assert result["inradius"] == pytest.approx(1.0, abs=1e-6)
    assert result["default_delta"] == pytest.approx(0.1, abs=1e-6)
    assert result["ghomi_equality_expected"]
    assert result["bouncing_ball_lengths"] == pytest.approx([4.0, 8.0], abs=1e-9)

    broken = asyncio.run(body_geometry({"dim": 2, "kind": "cube", "params": {}}))
    assert broken["error"]["status"] == 2


def test_shoot_tool_skips_non_coprime():
    result = asyncio.run(shoot_orbits(DISC, k_values=[2, 3, 4], j=2))
    assert [o["k"] for o in result["orbits"]] == [3]
    assert result["orbits"][0]["length"] == pytest.approx(3 * math.sqrt(3), abs=1e-8)


def test_verify_tool():
    poly = BouncePolygon(vertices=[[0.0, 1.0], [0.0, -1.0]])
    body = zoo_body("ellipse_2_1")
    data = trajectory_to_dict(from_polygon(poly, body))
    result = asyncio.run(verify_trajectory(data, body))
    assert result["passed"]
    assert result["p_plus"]["member"]
    assert result["certificate"]["accepted"]

    mismatch = asyncio.run(verify_trajectory(data, ball([0.0, 0.0, 0.0], 1.0)))
    assert mismatch["error"]["kind"] == "config-error"


def test_inequalities_tool(tmp_path):
    bodies = {"disc": zoo_body("disc"), "ellipse_2_1": zoo_body("ellipse_2_1")}
    result = asyncio.run(
        check_inequalities(bodies, nested=[("disc", "ellipse_2_1")], out_dir=str(tmp_path))
    )
    assert result["passed"]
    verdicts = {(r["name"], r["subject"]): r["verdict"] for r in result["reports"]}
    assert verdicts[("ghomi", "disc")] == "equality-within-tol"
    assert os.path.exists(result["files"]["csv"])


@pytest.mark.slow
def test_disc_periodic_pipeline(tmp_path):
    result = asyncio.run(
        solve_periodic(DISC, nodes=128, eps_schedule=ACCEPTANCE_SCHEDULE, out_dir=str(tmp_path))
    )
    assert result["success"], result
    assert result["length"] == pytest.approx(4.0, abs=1e-2)
    assert result["bounce_count"] == 2
    assert result["checks"]["potential_ratio"]["passed"]
    assert result["passed"]
    assert os.path.exists(result["files"]["csv"])


@pytest.mark.slow
def test_disc_brake_pipeline():
    result = asyncio.run(solve_brake(DISC, nodes=128, eps_schedule=ACCEPTANCE_SCHEDULE))
    assert result["success"], result
    assert result["length"] == pytest.approx(2.0, abs=1e-2)
    assert result["bounce_count"] == 0
    assert result["doubled_length"] == pytest.approx(4.0, abs=2e-2)
    bound = result["checks"]["brake_bound"]
    assert bound["tol"] == pytest.approx(4.0, abs=1e-6)
    assert bound["passed"]


def test_brake_bound_report_for_disc():
    """원판: μ_B = 2 ≤ 2n·r = 4."""
    result = asyncio.run(check_inequalities({"disc": zoo_body("disc")}))
    assert result["passed"]
    brake = next(r for r in result["reports"] if r["name"] == "brake-bound")
    assert brake["lhs"] == pytest.approx(4.0, abs=1e-6)
    assert brake["rhs"] == pytest.approx(2.0, abs=1e-9)
    assert brake["verdict"] == "holds"
    assert brake["provenance"]["mu_B"] == "double-normal"

    supplied = asyncio.run(
        check_inequalities({"disc": zoo_body("disc")}, brake_lengths={"disc": 2.004})
    )
    brake = next(r for r in supplied["reports"] if r["name"] == "brake-bound")
    assert brake["rhs"] == pytest.approx(2.004)
    assert brake["provenance"]["mu_B"] == "penalty"


def _checked_trace(conservation, warm, indices):
    rec = CriticalPointRecord(
        curve=diameter_loop(DISC, 16, direction=[1.0, 0.0]), lagrangian_value=8.0, grad_norm=0.0,
        morse_index=1, energy_value=8.0, potential_integral=0.0, epsilon=1e-6, delta=0.1,
    )
    return ContinuationTrace(
        records=[dataclasses.replace(rec, morse_index=i) for i in indices],
        diagnostics={
            "potential_ratio": 0.0, "window_ok": [True] * len(indices), "window": [1.0, 16.0],
            "conservation": conservation, "warm_start_ratios": warm,
        },
    )


def test_continuation_checks_report_advisories_separately():
    traj = from_polygon(BouncePolygon(vertices=[[-1.0, 0.0], [1.0, 0.0]]), DISC)
    reflection = verify_reflection(traj, DISC, tol=1e-3)

    rough = continuation_checks(_checked_trace([0.2, 0.0, 0.0], [50.0, 1.0], [1, 2, 1]),
                                traj, reflection, DISC)
    assert checks_passed(rough)
    assert sorted(check_warnings(rough)) == ["energy_conservation", "index_stability",
                                             "warm_start"]
    assert rough["energy_conservation"]["value"] == pytest.approx(0.2)
    assert "energy_identity" not in rough

    clean = continuation_checks(_checked_trace([1e-4, 1e-4, 1e-4], [2.0, 3.0], [1, 1, 1]),
                                traj, reflection, DISC)
    assert checks_passed(clean)
    assert check_warnings(clean) == []
