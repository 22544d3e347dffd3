import json
import math
from pathlib import Path

import pytest

import marinex

DATA = Path(__file__).resolve().parents[1] / "data"


def test_presets_listed():
    names = marinex.list_presets()
    assert {"calm-pool", "large-wave", "small-wave", "teleop-pool"} <= set(names)


def test_calm_pool_run():
    result = marinex.run(marinex.load_preset("calm-pool"))
    metrics = result["metrics"]
    assert metrics["success"] is True
    assert metrics["final_depth"] < 3.0
    assert result["telemetry"][-1]["phase"] == "HOLD"
    assert result["telemetry"][0]["tick"] == 0


def test_jsonl_is_deterministic_and_replays():
    scenario = marinex.load_preset("small-wave")
    scenario["duration"] = 10.0
    a = marinex.telemetry_jsonl(scenario)
    assert a == marinex.telemetry_jsonl(scenario)
    assert marinex.compute_metrics(a) == marinex.run(scenario)["metrics"]


def test_validation_error_names_field():
    scenario = marinex.load_preset("calm-pool")
    scenario["dt"] = 0.0
    with pytest.raises(marinex.ValidationError, match="dt"):
        marinex.run(scenario)
    with pytest.raises(ValueError):
        marinex.load_preset("no-such-preset")


def test_top_speed():
    state = {"x": 0, "y": 0, "heading": 0, "surge": 0, "sway": 0, "yaw_rate": 0}
    for _ in range(6000):
        state = marinex.vessel_step(state, 49.52, 49.52)
    assert abs(state["surge"] - 2.058) / 2.058 < 0.01
    assert abs(marinex.steady_state_speed() - 2.058) / 2.058 < 0.01


def test_camera_projection():
    state = {"x": 0, "y": 0, "heading": 0}
    det = marinex.project_target(state, 10.0, 0.0)
    assert det["center_x"] == pytest.approx(640.0)
    assert marinex.project_target(state, -10.0, 0.0) is None


def test_pid_examples():
    assert marinex.pid_update(0.0, 0.1, 0.5, 0.1, 0.0)["u"] == 0.0
    assert marinex.pid_update(10.0, 0.1, 0.5, 0.0, 0.0)["u"] == pytest.approx(5.0, abs=1e-12)
    out = marinex.pid_update(10.0, 0.1, 0.5, 0.1, 0.0, integral=9.0, prev_error=10.0, primed=True)
    assert out["u"] == pytest.approx(6.0, abs=1e-12)


def test_loss_fixture():
    rows = {r["name"]: r["total"] for r in marinex.evaluate_loss_fixture(DATA / "yolo_loss_fixture.json")}
    assert rows["box_extent_mismatch"] == pytest.approx(0.1568, abs=1e-12)
    assert rows["class_half_half"] == pytest.approx(math.log(2.0), abs=1e-12)
    assert rows["confidence_responsible"] == pytest.approx(0.25, abs=1e-12)


def test_sweep_table():
    scenario = marinex.load_preset("calm-pool")
    csv = marinex.sweep(scenario, "controller.speed_cap", [0.8, 1.0], [1, 2], workers=2)
    lines = csv.strip().splitlines()
    assert lines[0].startswith("controller.speed_cap,runs,successes")
    assert len(lines) == 3
    with pytest.raises(marinex.ValidationError):
        marinex.sweep(scenario, "nope.x", [1], [1])


def test_interactive_simulation():
    scenario = marinex.load_preset("teleop-pool")
    scenario["duration"] = 1.0
    sim = marinex.Simulation(scenario)
    assert sim.mode == "TELEOP"
    sim.tick()
    sim.set_teleop(10.0, 12.0)
    rec = sim.tick()
    assert rec["thrust"] == {"left": 10.0, "right": 12.0}
    sim.set_mode("AUTO")
    rec = sim.tick()
    assert rec["event"].startswith("mode:TELEOP->AUTO")
    rest = sim.run_to_end()
    assert sim.finished
    assert rest[-1]["tick"] == 50
