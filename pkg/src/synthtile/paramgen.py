"""Per-tile generation parameters sampled from style-conditioned distributions.

Every sampler here is a pure function of its seed: each parameter group is
drawn from its own named substream, and normal draws are clipped rather than
rejected so the number of draws per tile never changes.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import SeededRng

REGIMES = ("low", "mid", "tall")
# Share of world area with low / mid / tall building stock.
REGIME_WEIGHTS = (0.12, 0.70, 0.18)

BUILDING_TYPES = ("rect", "l_shape")


@dataclass(frozen=True)
class StylePreset:
    name: str
    height_regime: str
    building_height_range: tuple[float, float]
    obj_density_range: tuple[float, float]
    tree_density_range: tuple[float, float]
    palette_id: int = 0
    gable_fraction: float = 0.3
    lot_size_range: tuple[float, float] = (14.0, 28.0)
    district_scale: float = 1.0  # multiplies the sampled district side; dense styles use > 1

    def __post_init__(self):
        if self.height_regime not in REGIMES:
            raise ValueError(f"unknown height regime {self.height_regime!r}")
        h1, h2 = self.building_height_range
        if not 0 < h1 < h2:
            raise ValueError(f"{self.name}: building heights need 0 < h1 < h2, got {(h1, h2)}")
        if not 0 < self.lot_size_range[0] <= self.lot_size_range[1]:
            raise ValueError(f"{self.name}: lot sizes must be positive and ordered")
        for lo, hi in (self.obj_density_range, self.tree_density_range):
            if not 0 <= lo <= hi <= 1:
                raise ValueError(f"{self.name}: density ranges must satisfy 0 <= lo <= hi <= 1")
        if self.district_scale <= 0:
            raise ValueError(f"{self.name}: district_scale must be > 0")


# Six abstract styles, two per height regime.
DEFAULT_PRESETS = (
    StylePreset("style-0", "low", (3.0, 12.0), (0.35, 0.6), (0.10, 0.30), palette_id=0, gable_fraction=0.6,
                lot_size_range=(10.0, 20.0)),
    StylePreset("style-1", "low", (3.0, 12.0), (0.45, 0.75), (0.05, 0.20), palette_id=1, gable_fraction=0.4,
                lot_size_range=(10.0, 20.0)),
    StylePreset("style-2", "mid", (3.0, 40.0), (0.55, 0.85), (0.05, 0.20), palette_id=2, gable_fraction=0.3,
                district_scale=1.15),
    StylePreset("style-3", "mid", (3.0, 40.0), (0.6, 0.9), (0.03, 0.15), palette_id=3, gable_fraction=0.2,
                district_scale=1.15),
    StylePreset("style-4", "tall", (3.0, 120.0), (0.85, 1.0), (0.02, 0.10), palette_id=4, gable_fraction=0.05,
                lot_size_range=(20.0, 40.0), district_scale=1.4),
    StylePreset("style-5", "tall", (3.0, 120.0), (0.9, 1.0), (0.02, 0.08), palette_id=5, gable_fraction=0.0,
                lot_size_range=(20.0, 40.0), district_scale=1.4),
)


def preset_by_name(name, presets=DEFAULT_PRESETS):
    for p in presets:
        if p.name == name:
            return p
    raise KeyError(name)


@dataclass(frozen=True)
class SensorParams:
    azimuth: float
    look_angle: float
    gsd: float
    image_size: int

    def __post_init__(self):
        if not 0.09 <= self.gsd <= 1.0:
            raise ValueError(f"gsd must lie in [0.09, 1.0], got {self.gsd}")
        if self.look_angle < 0:
            raise ValueError("look_angle must be >= 0")
        if self.image_size <= 0:
            raise ValueError("image_size must be positive")

    @property
    def footprint(self) -> float:
        return self.gsd * self.image_size


@dataclass(frozen=True)
class SunParams:
    elevation: float
    intensity: float
    color: tuple[float, float, float]
    azimuth: float = 135.0

    def __post_init__(self):
        if not 0 < self.elevation <= 90:
            raise ValueError("sun elevation must lie in (0, 90]")
        if self.intensity <= 0:
            raise ValueError("sun intensity must be positive")


@dataclass(frozen=True)
class GridParams:
    district_num: int
    district_size: int  # percent of the tile side
    obj_density: float


@dataclass(frozen=True)
class TerrainParams:
    flat_area: float
    mountain_area: float
    sea_area: float
    tree_density: float


@dataclass(frozen=True)
class NetworkParams:
    river_num: int
    road_num: int
    width: float


@dataclass(frozen=True)
class BuildingSpec:
    height_range: tuple[float, float]
    types: tuple[str, ...]
    roof_angle_range: tuple[float, float]
    gable_fraction: float
    lot_size_range: tuple[float, float]


@dataclass(frozen=True)
class TreeSpec:
    branch_num: int
    leaf_num: int
    trunk_height_range: tuple[float, float]
    crown_radius_range: tuple[float, float]


@dataclass(frozen=True)
class ScenePlan:
    sensor: SensorParams
    sun: SunParams
    grid: GridParams
    terrain: TerrainParams
    network: NetworkParams
    building_spec: BuildingSpec
    tree_spec: TreeSpec
    removal_fraction: float
    style: StylePreset
    seed: int

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class DistributionBounds:
    """Support of every plan distribution; all values are config-overridable."""

    azimuth: tuple[float, float] = (0.0, 360.0)
    look_angle_mean: float = 0.0
    look_angle_std: float = 5.0
    look_angle_clip: tuple[float, float] = (0.0, 25.0)
    gsd_mean: float = 0.35
    gsd_std: float = 0.2
    gsd_clip: tuple[float, float] = (0.09, 1.0)
    image_size: int = 512
    sun_elevation: tuple[float, float] = (25.0, 75.0)
    sun_intensity: tuple[float, float] = (0.8, 1.2)
    sun_color: tuple[float, float] = (0.85, 1.0)
    district_num: tuple[int, int] = (1, 4)
    district_size: tuple[int, int] = (30, 70)
    flat_area: tuple[float, float] = (0.55, 0.85)
    mountain_area: tuple[float, float] = (0.0, 0.15)
    sea_area: tuple[float, float] = (0.0, 0.10)
    river_num: tuple[int, int] = (0, 1)
    road_num: tuple[int, int] = (1, 3)
    width: tuple[float, float] = (5.0, 12.0)
    roof_angle: tuple[float, float] = (15.0, 40.0)
    branch_num: tuple[int, int] = (3, 8)
    leaf_num: tuple[int, int] = (50, 200)
    trunk_height: tuple[float, float] = (1.5, 4.0)
    crown_radius: tuple[float, float] = (1.5, 4.5)
    removal_fraction: tuple[float, float] = (0.1, 0.5)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise KeyError(f"unknown distribution keys: {sorted(unknown)}")
        conv = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return dataclasses.replace(cls(), **conv)


DEFAULT_BOUNDS = DistributionBounds()


def clipped_normal(rng, mean, std, low, high):
    """One normal draw clipped to [low, high] and to mean ± 4 std."""
    x = rng.normal(mean, std)
    lo = max(low, mean - 4 * std)
    hi = min(high, mean + 4 * std)
    return float(min(max(x, lo), hi))


def _randint(rng, bounds):
    lo, hi = bounds
    return int(rng.integers(lo, hi + 1))


def _uniform(rng, bounds):
    return float(rng.uniform(*bounds))


def sample_regime(seed: int) -> str:
    """Categorical draw of the height regime with the world-area prior."""
    rng = SeededRng(seed).child("regime").generator()
    return REGIMES[int(rng.choice(len(REGIMES), p=REGIME_WEIGHTS))]


def sample_scene_plan(style: StylePreset, seed: int, bounds: DistributionBounds = DEFAULT_BOUNDS) -> ScenePlan:
    root = SeededRng(seed)
    b = bounds

    rng = root.child("sensor").generator()
    sensor = SensorParams(
        azimuth=_uniform(rng, b.azimuth),
        look_angle=clipped_normal(rng, b.look_angle_mean, b.look_angle_std, *b.look_angle_clip),
        gsd=clipped_normal(rng, b.gsd_mean, b.gsd_std, *b.gsd_clip),
        image_size=int(b.image_size),
    )

    rng = root.child("sun").generator()
    sun = SunParams(
        elevation=_uniform(rng, b.sun_elevation),
        intensity=_uniform(rng, b.sun_intensity),
        color=tuple(_uniform(rng, b.sun_color) for _ in range(3)),
        azimuth=float(rng.uniform(0.0, 360.0)),
    )

    rng = root.child("grid").generator()
    grid = GridParams(
        district_num=_randint(rng, b.district_num),
        district_size=_randint(rng, b.district_size),
        obj_density=_uniform(rng, style.obj_density_range),
    )

    rng = root.child("terrain").generator()
    flat, mountain, sea = (_uniform(rng, b.flat_area), _uniform(rng, b.mountain_area), _uniform(rng, b.sea_area))
    total = flat + mountain + sea
    if total > 1.0:
        flat, mountain, sea = flat / total, mountain / total, sea / total
    terrain = TerrainParams(flat, mountain, sea, _uniform(rng, style.tree_density_range))

    rng = root.child("network").generator()
    network = NetworkParams(
        river_num=_randint(rng, b.river_num),
        road_num=_randint(rng, b.road_num),
        width=_uniform(rng, b.width),
    )

    building_spec = BuildingSpec(
        height_range=tuple(style.building_height_range),
        types=BUILDING_TYPES,
        roof_angle_range=tuple(b.roof_angle),
        gable_fraction=style.gable_fraction,
        lot_size_range=tuple(style.lot_size_range),
    )

    rng = root.child("trees").generator()
    tree_spec = TreeSpec(
        branch_num=_randint(rng, b.branch_num),
        leaf_num=_randint(rng, b.leaf_num),
        trunk_height_range=tuple(b.trunk_height),
        crown_radius_range=tuple(b.crown_radius),
    )

    rng = root.child("removal").generator()
    removal = _uniform(rng, b.removal_fraction)

    return ScenePlan(
        sensor=sensor,
        sun=sun,
        grid=grid,
        terrain=terrain,
        network=network,
        building_spec=building_spec,
        tree_spec=tree_spec,
        removal_fraction=removal,
        style=style,
        seed=int(seed),
    )


def sample_tile_plan(seed: int, presets=DEFAULT_PRESETS, bounds: DistributionBounds = DEFAULT_BOUNDS,
                     regime: Optional[str] = None) -> ScenePlan:
    """Draw a regime (unless given), pick one of its presets, then the full plan."""
    regime = regime or sample_regime(seed)
    candidates = [p for p in presets if p.height_regime == regime]
    if not candidates:
        raise ValueError(f"no preset for regime {regime!r}")
    rng = SeededRng(seed).child("style").generator()
    style = candidates[int(rng.integers(len(candidates)))]
    return sample_scene_plan(style, seed, bounds)
