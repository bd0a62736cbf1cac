"""Height-coverage outlier filter for generated tiles.

A tile whose share of pixels taller than ``height_threshold`` reaches
``min_coverage`` is always kept; below that it survives with sigmoid
probability ``1 / (1 + exp(-steepness * (coverage - min_coverage)))``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_raster
from .exceptions import EmptyRaster
from .rng import SeededRng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterParams:
    height_threshold: float = 3.0
    min_coverage: float = 0.05
    steepness: float = 40.0

    def __post_init__(self):
        if self.height_threshold <= 0:
            raise ValueError("height_threshold must be > 0")
        # 0 is accepted so that a filter can be configured to keep everything
        if not 0 <= self.min_coverage < 1:
            raise ValueError("min_coverage must lie in [0, 1)")
        if self.steepness <= 0:
            raise ValueError("steepness must be > 0")


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    p_c: float
    pr: float


@dataclass
class FilterReport:
    records: list = field(default_factory=list)  # dicts {tile_id, p_c, pr, kept}
    failures: list = field(default_factory=list)  # dicts {tile_id, error}

    @property
    def kept_ids(self):
        return [r["tile_id"] for r in self.records if r["kept"]]


def coverage_fraction(ndsm, height_threshold: float) -> float:
    """Share of pixels strictly above ``height_threshold``."""
    a = check_raster(ndsm, "ndsm", ndim=None, allow_empty=True)
    if a.size == 0:
        raise EmptyRaster("ndsm has no pixels")
    return float(np.count_nonzero(a > height_threshold)) / a.size


def accept_probability(p_c: float, params: FilterParams) -> float:
    x = -params.steepness * (p_c - params.min_coverage)
    # numerically stable logistic
    if x >= 0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def _as_generator(rng):
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def filter_tile(ndsm, params: FilterParams, rng) -> FilterDecision:
    p_c = coverage_fraction(ndsm, params.height_threshold)
    pr = accept_probability(p_c, params)
    if p_c >= params.min_coverage:
        return FilterDecision(True, p_c, pr)
    return FilterDecision(bool(_as_generator(rng).random() < pr), p_c, pr)


def tile_stream(seed: int, tile_id) -> SeededRng:
    """Per-tile substream, so decisions do not depend on processing order."""
    return SeededRng(seed).child("filter").child(str(tile_id))


def filter_dataset(tiles, params: FilterParams, seed: int):
    """Filter ``(tile_id, ndsm)`` pairs; ``ndsm`` may be an array or a zero-argument loader.

    Returns the kept tile ids in input order and a :class:`FilterReport`.
    Loader failures are recorded and the remaining tiles are still processed.
    """
    report = FilterReport()
    kept = []
    for tile_id, source in tiles:
        try:
            ndsm = source() if callable(source) else source
            d = filter_tile(ndsm, params, tile_stream(seed, tile_id))
        except (OSError, ValueError) as exc:
            log.warning("tile %s failed: %s", tile_id, exc)
            report.failures.append({"tile_id": tile_id, "error": str(exc)})
            continue
        report.records.append({"tile_id": tile_id, "p_c": d.p_c, "pr": d.pr, "kept": d.keep})
        if d.keep:
            kept.append(tile_id)
    return kept, report


class OutlierFilter(BaseEstimator):
    """Estimator wrapper: ``predict`` returns keep flags for a sequence of nDSM rasters.

    Tiles are identified by position unless ``tile_ids`` is passed, and each
    draws from its own substream of ``random_state``.
    """

    def __init__(self, height_threshold=3.0, min_coverage=0.05, steepness=40.0, random_state=0):
        self.height_threshold = height_threshold
        self.min_coverage = min_coverage
        self.steepness = steepness
        self.random_state = random_state

    def _params(self):
        return FilterParams(self.height_threshold, self.min_coverage, self.steepness)

    def fit(self, X=None, y=None):
        self.params_ = self._params()
        return self

    def coverage(self, X):
        return np.array([coverage_fraction(a, self.height_threshold) for a in X])

    def decision_function(self, X):
        params = self._params()
        return np.array([accept_probability(p, params) for p in self.coverage(X)])

    def predict(self, X, tile_ids=None):
        params = getattr(self, "params_", None) or self._params()
        ids = range(len(X)) if tile_ids is None else tile_ids
        return np.array([filter_tile(a, params, tile_stream(self.random_state, t)).keep
                         for a, t in zip(X, ids)])
