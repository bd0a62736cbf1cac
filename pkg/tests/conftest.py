import dataclasses

import numpy as np
import pytest

from synthtile.paramgen import DEFAULT_BOUNDS, preset_by_name, sample_scene_plan


def plan_with(style="style-2", seed=3, image_size=128, gsd=0.5, look_angle=0.0, **groups):
    """Sampled plan with selected fields pinned.

    ``groups`` maps a plan group name (``grid``, ``terrain``, ``network``, ...)
    to a dict of field overrides.
    """
    bounds = dataclasses.replace(DEFAULT_BOUNDS, image_size=image_size)
    plan = sample_scene_plan(preset_by_name(style), seed, bounds)
    plan = dataclasses.replace(plan, sensor=dataclasses.replace(plan.sensor, gsd=gsd, look_angle=look_angle))
    for name, fields in groups.items():
        plan = dataclasses.replace(plan, **{name: dataclasses.replace(getattr(plan, name), **fields)})
    return plan


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, text = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
