"""Job configuration: TOML file with [job], [output], [sensor], [scene], [filter] and [styles.*]."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import tomli

from .exceptions import ConfigError
from .filter import FilterParams
from .paramgen import DEFAULT_BOUNDS, DEFAULT_PRESETS, DistributionBounds, StylePreset

SENSOR_KEYS = ("azimuth", "look_angle_mean", "look_angle_std", "look_angle_clip", "gsd_mean", "gsd_std",
               "gsd_clip", "image_size")
SCENE_KEYS = tuple(f.name for f in dataclasses.fields(DistributionBounds) if f.name not in SENSOR_KEYS)
JOB_KEYS = ("count", "seed", "workers")
OUTPUT_KEYS = ("root", "texture_seed_xor")
FILTER_KEYS = ("height_threshold", "min_coverage", "steepness")
STYLE_KEYS = tuple(f.name for f in dataclasses.fields(StylePreset) if f.name != "name")
SECTIONS = ("job", "output", "sensor", "scene", "filter", "styles")

DEFAULT_TEXTURE_XOR = 0x5EED_7E47


@dataclass(frozen=True)
class JobConfig:
    presets: tuple = DEFAULT_PRESETS
    bounds: DistributionBounds = DEFAULT_BOUNDS
    filter: FilterParams = field(default_factory=FilterParams)
    count: int = 10
    seed: int = 0
    workers: int = 1
    out: Optional[str] = None
    texture_seed_xor: int = DEFAULT_TEXTURE_XOR

    def __post_init__(self):
        if self.count < 0:
            raise ConfigError("count must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        regimes = {p.height_regime for p in self.presets}
        if regimes != {"low", "mid", "tall"}:
            raise ConfigError(f"presets must cover all three height regimes, got {sorted(regimes)}")

    def content_hash(self) -> str:
        """Hash of everything that affects tile content (not count, workers or output root)."""
        doc = {
            "presets": [dataclasses.asdict(p) for p in self.presets],
            "bounds": dataclasses.asdict(self.bounds),
            "filter": dataclasses.asdict(self.filter),
            "seed": self.seed,
            "texture_seed_xor": self.texture_seed_xor,
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _check_keys(section, table, allowed):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {sorted(unknown)}")


def _tuplify(d):
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def config_from_dict(doc: dict) -> JobConfig:
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    job = doc.get("job", {})
    output = doc.get("output", {})
    sensor = doc.get("sensor", {})
    scene = doc.get("scene", {})
    filt = doc.get("filter", {})
    styles = doc.get("styles", {})
    for name, table, allowed in (("job", job, JOB_KEYS), ("output", output, OUTPUT_KEYS),
                                 ("sensor", sensor, SENSOR_KEYS), ("scene", scene, SCENE_KEYS),
                                 ("filter", filt, FILTER_KEYS)):
        _check_keys(name, table, allowed)
    try:
        bounds = DistributionBounds.from_dict({**sensor, **scene})
        presets = {p.name: p for p in DEFAULT_PRESETS}
        for name, table in styles.items():
            _check_keys(f"styles.{name}", table, STYLE_KEYS)
            if name in presets:
                presets[name] = dataclasses.replace(presets[name], **_tuplify(table))
            else:
                presets[name] = StylePreset(name=name, **_tuplify(table))
        return JobConfig(
            presets=tuple(presets.values()),
            bounds=bounds,
            filter=FilterParams(**filt),
            count=int(job.get("count", 10)),
            seed=int(job.get("seed", 0)),
            workers=int(job.get("workers", 1)),
            out=output.get("root"),
            texture_seed_xor=int(output.get("texture_seed_xor", DEFAULT_TEXTURE_XOR)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> JobConfig:
    try:
        doc = tomli.loads(Path(path).read_text())
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc)
