import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from synthtile.paramgen import (
    DEFAULT_BOUNDS,
    DEFAULT_PRESETS,
    REGIME_WEIGHTS,
    REGIMES,
    DistributionBounds,
    SensorParams,
    StylePreset,
    clipped_normal,
    preset_by_name,
    sample_regime,
    sample_scene_plan,
    sample_tile_plan,
)
from synthtile.rng import SeededRng


def test_plan_is_pure_function_of_style_and_seed():
    style = preset_by_name("style-2")
    a = sample_scene_plan(style, 42)
    b = sample_scene_plan(style, 42)
    assert a == b
    assert repr(a.to_dict()) == repr(b.to_dict())
    assert sample_scene_plan(style, 43) != a


def test_regime_weights_sum_to_one():
    assert sum(REGIME_WEIGHTS) == 1.0
    assert dict(zip(REGIMES, REGIME_WEIGHTS)) == {"low": 0.12, "mid": 0.70, "tall": 0.18}


def test_regime_fixed_seed_repeats():
    assert len({sample_regime(99) for _ in range(5)}) == 1


def _regime_counts(n):
    counts = dict.fromkeys(REGIMES, 0)
    for s in range(n):
        counts[sample_regime(s)] += 1
    return np.array([counts[r] for r in REGIMES])


def test_regime_frequencies_10k():
    freq = _regime_counts(10_000) / 10_000
    assert np.all(np.abs(freq - np.array(REGIME_WEIGHTS)) <= 0.02)


@pytest.mark.slow
def test_regime_chi_square_100k():
    counts = _regime_counts(100_000)
    assert abs(counts[1] / 100_000 - 0.70) <= 0.01
    _, p = stats.chisquare(counts, np.array(REGIME_WEIGHTS) * 100_000)
    assert p > 0.01


def _check_support(plan, b=DEFAULT_BOUNDS):
    s = plan.sensor
    assert b.azimuth[0] <= s.azimuth <= b.azimuth[1]
    lo = max(b.look_angle_clip[0], b.look_angle_mean - 4 * b.look_angle_std)
    hi = min(b.look_angle_clip[1], b.look_angle_mean + 4 * b.look_angle_std)
    assert lo <= s.look_angle <= hi
    assert 0.09 <= s.gsd <= 1.0
    assert b.gsd_clip[0] <= s.gsd <= b.gsd_clip[1]
    assert b.sun_elevation[0] <= plan.sun.elevation <= b.sun_elevation[1]
    assert b.sun_intensity[0] <= plan.sun.intensity <= b.sun_intensity[1]
    assert all(b.sun_color[0] <= c <= b.sun_color[1] for c in plan.sun.color)
    g = plan.grid
    assert b.district_num[0] <= g.district_num <= b.district_num[1]
    assert b.district_size[0] <= g.district_size <= b.district_size[1]
    assert plan.style.obj_density_range[0] <= g.obj_density <= plan.style.obj_density_range[1]
    t = plan.terrain
    assert 0 <= t.flat_area and 0 <= t.mountain_area and 0 <= t.sea_area
    assert t.flat_area + t.mountain_area + t.sea_area <= 1.0 + 1e-12
    assert plan.style.tree_density_range[0] <= t.tree_density <= plan.style.tree_density_range[1]
    n = plan.network
    assert b.river_num[0] <= n.river_num <= b.river_num[1]
    assert b.road_num[0] <= n.road_num <= b.road_num[1]
    assert b.width[0] <= n.width <= b.width[1]
    assert plan.building_spec.height_range == plan.style.building_height_range
    tr = plan.tree_spec
    assert b.branch_num[0] <= tr.branch_num <= b.branch_num[1]
    assert b.leaf_num[0] <= tr.leaf_num <= b.leaf_num[1]
    assert b.removal_fraction[0] <= plan.removal_fraction <= b.removal_fraction[1]


@pytest.mark.slow
def test_supports_over_10k_seeds():
    for seed in range(10_000):
        _check_support(sample_tile_plan(seed))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), style=st.sampled_from([p.name for p in DEFAULT_PRESETS]))
def test_supports_property(seed, style):
    _check_support(sample_scene_plan(preset_by_name(style), seed))


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32), mean=st.floats(-10, 10), std=st.floats(0.01, 5))
def test_clipped_normal_bounds(seed, mean, std):
    x = clipped_normal(np.random.default_rng(seed), mean, std, mean - 2 * std, mean + 10 * std)
    assert mean - 2 * std <= x <= mean + 4 * std


def test_tile_plan_regime_matches_preset():
    for seed in range(200):
        for regime in REGIMES:
            plan = sample_tile_plan(seed, regime=regime)
            assert plan.style.height_regime == regime


def test_substreams_are_independent_of_style_choice():
    # sensor draws do not depend on which preset was picked
    a = sample_scene_plan(preset_by_name("style-0"), 5)
    b = sample_scene_plan(preset_by_name("style-5"), 5)
    assert a.sensor == b.sensor and a.sun == b.sun


def test_gsd_range_enforced():
    with pytest.raises(ValueError):
        SensorParams(0.0, 0.0, 0.05, 512)
    with pytest.raises(ValueError):
        SensorParams(0.0, 0.0, 1.5, 512)
    assert SensorParams(0.0, 0.0, 0.5, 512).footprint == 256.0


def test_preset_validation():
    with pytest.raises(ValueError):
        StylePreset("bad", "huge", (3, 12), (0, 1), (0, 1))
    with pytest.raises(ValueError):
        StylePreset("bad", "low", (12, 3), (0, 1), (0, 1))
    with pytest.raises(ValueError):
        StylePreset("bad", "low", (3, 12), (0.5, 1.2), (0, 1))
    with pytest.raises(KeyError):
        preset_by_name("nope")


def test_bounds_from_dict_rejects_unknown_keys():
    b = DistributionBounds.from_dict({"gsd_mean": 0.5, "width": [4, 6]})
    assert b.gsd_mean == 0.5 and b.width == (4, 6)
    with pytest.raises(KeyError):
        DistributionBounds.from_dict({"nope": 1})


def test_area_fractions_normalized_when_oversubscribed():
    b = dataclasses.replace(DEFAULT_BOUNDS, flat_area=(0.9, 0.9), mountain_area=(0.3, 0.3), sea_area=(0.3, 0.3))
    t = sample_scene_plan(preset_by_name("style-1"), 1, b).terrain
    assert t.flat_area + t.mountain_area + t.sea_area == pytest.approx(1.0)


def test_seeded_rng_paths():
    a = SeededRng(7).child("x").child(3)
    assert a.integer_seed() == SeededRng(7).child("x").child(3).integer_seed()
    assert a.integer_seed() != SeededRng(7).child("x").child(4).integer_seed()
    assert a.generator().random() == SeededRng(7).child("x").child(3).generator().random()
