"""Python front end to the marinex simulator core.

Scenarios are plain dicts in the same shape as the scenario JSON files.
"""

import json
import os
from pathlib import Path

from . import _marinex
from ._marinex import ValidationError, steady_state_speed

__all__ = [
    "ValidationError",
    "Simulation",
    "compute_metrics",
    "evaluate_loss_fixture",
    "list_presets",
    "load_preset",
    "pid_update",
    "preset_dir",
    "project_target",
    "run",
    "steady_state_speed",
    "sweep",
    "telemetry_jsonl",
    "vessel_step",
]


def preset_dir():
    """Directory searched for presets: $MARINEX_PRESET_DIR, the bundled copy, else the build default."""
    env = os.environ.get("MARINEX_PRESET_DIR")
    if env:
        return env
    bundled = Path(__file__).with_name("presets")
    if bundled.is_dir():
        return str(bundled)
    return _marinex.default_preset_dir()


def _text(scenario):
    return scenario if isinstance(scenario, str) else json.dumps(scenario)


def list_presets():
    return _marinex.list_presets(preset_dir())


def load_preset(name):
    return json.loads(_marinex.load_preset(name, preset_dir()))


def run(scenario):
    """Runs a scenario dict to completion. Returns {"metrics": ..., "telemetry": [...]}."""
    return json.loads(_marinex.run(_text(scenario)))


def telemetry_jsonl(scenario):
    return _marinex.telemetry_jsonl(_text(scenario))


def compute_metrics(jsonl):
    return json.loads(_marinex.compute_metrics(jsonl))


def sweep(scenario, axis, values, seeds, workers=0):
    """Returns the sweep table as CSV text."""
    return _marinex.sweep(_text(scenario), axis, json.dumps(list(values)), list(seeds), workers)


def vessel_step(state, left, right, dt=0.02, params=None):
    out = _marinex.vessel_step(json.dumps(state), left, right, dt, json.dumps(params) if params else "")
    return json.loads(out)


def project_target(state, target_x, target_y):
    return _marinex.project_target(json.dumps(state), target_x, target_y)


def pid_update(error, dt, kp, ki, kd, integral=0.0, prev_error=0.0, primed=False):
    return _marinex.pid_update(error, dt, kp, ki, kd, integral, prev_error, primed)


def evaluate_loss_fixture(path):
    return json.loads(_marinex.evaluate_loss_fixture(str(path)))


class Simulation:
    """Tick-by-tick access to one run."""

    def __init__(self, scenario):
        self._sim = _marinex.Simulation(_text(scenario))

    def tick(self):
        return json.loads(self._sim.tick())

    @property
    def finished(self):
        return self._sim.finished

    @property
    def next_tick(self):
        return self._sim.next_tick

    @property
    def mode(self):
        return self._sim.mode

    @property
    def phase(self):
        return self._sim.phase

    def set_mode(self, mode):
        self._sim.set_mode(mode)

    def set_teleop(self, left, right):
        self._sim.set_teleop(left, right)

    def set_gains(self, kp, ki, kd):
        self._sim.set_gains(kp, ki, kd)

    def reset(self):
        self._sim.reset()

    def run_to_end(self):
        records = []
        while not self.finished:
            records.append(self.tick())
        return records
