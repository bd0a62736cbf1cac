"""Height-estimation and land-cover metrics, dataset statistics, damage mapping."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ._validation import check_raster, check_same_shape

log = logging.getLogger(__name__)

ETAS = (1.25, 1.25 ** 2, 1.25 ** 3)
HIGH_THRESHOLD = 3.0
F1_THRESHOLD = 1.0
DEFAULT_EPS = 0.01
NUM_CLASSES = 8


def _eta_key(eta):
    return f"{eta:.6g}"


class HeightErrors(NamedTuple):
    mae: Optional[float]
    rmse: Optional[float]
    n: int


def region_mask(gt, region: str):
    if region == "whole":
        return np.ones(np.shape(gt), dtype=bool)
    if region == "high":
        return np.asarray(gt) > HIGH_THRESHOLD
    raise ValueError(f"unknown region {region!r}")


def height_errors(pred, gt, region: str = "whole") -> HeightErrors:
    """MAE and RMSE over the region; both are ``None`` when the region is empty."""
    check_same_shape(pred, gt, names=["pred", "gt"])
    p = check_raster(pred, "pred", ndim=None)
    g = check_raster(gt, "gt", ndim=None)
    m = region_mask(g, region)
    n = int(m.sum())
    if n == 0:
        return HeightErrors(None, None, 0)
    d = p[m] - g[m]
    return HeightErrors(float(np.mean(np.abs(d))), float(np.sqrt(np.mean(d * d))), n)


def max_ratio_map(pred, gt, eps: float = DEFAULT_EPS):
    """Per-pixel ``max(pred/gt, gt/pred)`` with both operands clamped below at ``eps``."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    p = np.maximum(np.asarray(pred, dtype=np.float64), eps)
    g = np.maximum(np.asarray(gt, dtype=np.float64), eps)
    return np.maximum(p / g, g / p)


def delta_accuracy(delta, eta: float, mask=None) -> float:
    if eta <= 1:
        raise ValueError("eta must be > 1")
    d = np.asarray(delta)
    if mask is not None:
        d = d[np.asarray(mask, dtype=bool)]
    if d.size == 0:
        return float("nan")
    return float(np.count_nonzero(d < eta)) / d.size


class F1Counts(NamedTuple):
    tp: int
    fp: int
    fn: int


def f1_counts(pred, gt, threshold: float = F1_THRESHOLD, eta: float = ETAS[0], eps: float = DEFAULT_EPS) -> F1Counts:
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    delta = max_ratio_map(p, g, eps)
    ph, gh = p > threshold, g > threshold
    tp = int(np.count_nonzero(ph & gh & (delta < eta)))
    fp = int(np.count_nonzero(ph & ~gh))
    fn = int(np.count_nonzero(~ph & gh))
    return F1Counts(tp, fp, fn)


def f1_from_counts(c: F1Counts) -> float:
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def f1_he(pred, gt, threshold: float = F1_THRESHOLD, eta: float = ETAS[0], eps: float = DEFAULT_EPS):
    """F1 over pixels taller than ``threshold``; ``None`` (skip) when gt has no such pixel."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    check_same_shape(pred, gt, names=["pred", "gt"])
    if not np.any(np.asarray(gt) > threshold):
        return None
    return f1_from_counts(f1_counts(pred, gt, threshold, eta, eps))


# ---------------------------------------------------------------- segmentation

@dataclass
class SegEvalReport:
    iou: np.ndarray  # per class, NaN where the class is absent from pred and gt
    miou: float
    confusion: np.ndarray  # rows = gt, cols = pred

    def to_dict(self, class_names=None):
        names = class_names or [str(i) for i in range(len(self.iou))]
        return {
            "iou": {n: (None if np.isnan(v) else float(v)) for n, v in zip(names, self.iou)},
            "miou": self.miou,
        }


def confusion_matrix(pred, gt, num_classes: int = NUM_CLASSES):
    check_same_shape(pred, gt, names=["pred", "gt"])
    p = np.asarray(pred).ravel().astype(np.int64)
    g = np.asarray(gt).ravel().astype(np.int64)
    if p.size and (p.min() < 0 or p.max() >= num_classes or g.min() < 0 or g.max() >= num_classes):
        raise ValueError("label ids outside the class set")
    return np.bincount(g * num_classes + p, minlength=num_classes * num_classes).reshape(num_classes, num_classes)


def seg_report_from_confusion(conf) -> SegEvalReport:
    conf = np.asarray(conf, dtype=np.int64)
    inter = np.diag(conf).astype(np.float64)
    union = conf.sum(0) + conf.sum(1) - np.diag(conf)
    with np.errstate(invalid="ignore", divide="ignore"):
        iou = np.where(union > 0, inter / np.maximum(union, 1), np.nan)
    present = ~np.isnan(iou)
    miou = float(iou[present].mean()) if present.any() else float("nan")
    return SegEvalReport(iou=iou, miou=miou, confusion=conf)


def seg_iou(pred, gt, num_classes: int = NUM_CLASSES) -> SegEvalReport:
    return seg_report_from_confusion(confusion_matrix(pred, gt, num_classes))


# ---------------------------------------------------------------- height report

@dataclass
class HeightEvalReport:
    mae_whole: Optional[float] = None
    mae_high: Optional[float] = None
    rmse_whole: Optional[float] = None
    rmse_high: Optional[float] = None
    delta_acc: dict = field(default_factory=dict)  # {"whole"|"high": {eta: acc}}
    f1_he: dict = field(default_factory=dict)  # {eta: mean F1 over non-skipped images}
    n_images: int = 0
    n_skipped: int = 0

    def to_dict(self):
        return {
            "whole": {
                "mae": self.mae_whole,
                "rmse": self.rmse_whole,
                "delta": self.delta_acc.get("whole", {}),
                "f1_he": self.f1_he,
            },
            "high": {
                "mae": self.mae_high,
                "rmse": self.rmse_high,
                "delta": self.delta_acc.get("high", {}),
            },
            "n_images": self.n_images,
            "n_skipped": self.n_skipped,
        }


class HeightEvaluator:
    """Accumulates pixel-pooled errors and per-image F1-HE over many tiles.

    MAE/RMSE/delta are pooled over all pixels (pixel-weighted); F1-HE is the
    mean of per-image scores over images whose ground truth has tall pixels.
    """

    def __init__(self, etas=ETAS, eps=DEFAULT_EPS, f1_threshold=F1_THRESHOLD):
        self.etas = tuple(etas)
        self.eps = eps
        self.f1_threshold = f1_threshold
        self._abs = {"whole": 0.0, "high": 0.0}
        self._sq = {"whole": 0.0, "high": 0.0}
        self._n = {"whole": 0, "high": 0}
        self._hits = {r: {e: 0 for e in self.etas} for r in ("whole", "high")}
        self._f1 = {e: [] for e in self.etas}
        self.n_images = 0
        self.n_skipped = 0

    def update(self, pred, gt):
        """Add one image; returns its per-image report as a dict."""
        check_same_shape(pred, gt, names=["pred", "gt"])
        p = np.asarray(pred, dtype=np.float64)
        g = np.asarray(gt, dtype=np.float64)
        delta = max_ratio_map(p, g, self.eps)
        single = {}
        for region in ("whole", "high"):
            m = region_mask(g, region)
            d = (p - g)[m]
            n = d.size
            self._abs[region] += float(np.sum(np.abs(d)))
            self._sq[region] += float(np.sum(d * d))
            self._n[region] += n
            rd = delta[m]
            acc = {}
            for e in self.etas:
                hits = int(np.count_nonzero(rd < e))
                self._hits[region][e] += hits
                acc[_eta_key(e)] = hits / n if n else None
            single[region] = {
                "mae": float(np.mean(np.abs(d))) if n else None,
                "rmse": float(np.sqrt(np.mean(d * d))) if n else None,
                "delta": acc,
                "n_pixels": n,
            }
        f1 = {}
        for e in self.etas:
            v = f1_he(p, g, self.f1_threshold, e, self.eps)
            f1[_eta_key(e)] = v
            if v is not None:
                self._f1[e].append(v)
        single["whole"]["f1_he"] = f1
        self.n_images += 1
        if f1[_eta_key(self.etas[0])] is None:
            self.n_skipped += 1
        return single

    def report(self) -> HeightEvalReport:
        def ratio(a, n):
            return a / n if n else None

        rep = HeightEvalReport(n_images=self.n_images, n_skipped=self.n_skipped)
        rep.mae_whole = ratio(self._abs["whole"], self._n["whole"])
        rep.mae_high = ratio(self._abs["high"], self._n["high"])
        rw = ratio(self._sq["whole"], self._n["whole"])
        rh = ratio(self._sq["high"], self._n["high"])
        rep.rmse_whole = None if rw is None else float(np.sqrt(rw))
        rep.rmse_high = None if rh is None else float(np.sqrt(rh))
        rep.delta_acc = {r: {_eta_key(e): ratio(self._hits[r][e], self._n[r]) for e in self.etas}
                         for r in ("whole", "high")}
        rep.f1_he = {_eta_key(e): (float(np.mean(v)) if v else None) for e, v in self._f1.items()}
        return rep


def evaluate_height(pred, gt, **kwargs) -> HeightEvalReport:
    ev = HeightEvaluator(**kwargs)
    ev.update(pred, gt)
    return ev.report()


# ---------------------------------------------------------------- dataset statistics

@dataclass
class DatasetStats:
    height_mean: float
    height_std: float
    class_proportions: np.ndarray
    n_tiles: int
    n_pixels: int
    per_style: dict = field(default_factory=dict)  # style -> DatasetStats
    failures: list = field(default_factory=list)

    def to_dict(self, class_names=None):
        names = class_names or [str(i) for i in range(len(self.class_proportions))]
        d = {
            "height_mean": self.height_mean,
            "height_std": self.height_std,
            "class_proportions": {n: float(v) for n, v in zip(names, self.class_proportions)},
            "n_tiles": self.n_tiles,
            "n_pixels": self.n_pixels,
        }
        if self.per_style:
            d["per_style"] = {k: v.to_dict(class_names) for k, v in sorted(self.per_style.items())}
        if self.failures:
            d["failures"] = self.failures
        return d


class StatsAccumulator:
    """Streaming mean/variance (Chan's parallel update) and class counts."""

    def __init__(self, num_classes=NUM_CLASSES):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.class_counts = np.zeros(num_classes, dtype=np.int64)
        self.n_tiles = 0

    def update(self, ndsm=None, label=None):
        if ndsm is not None:
            a = np.asarray(ndsm, dtype=np.float64).ravel()
            nb = a.size
            if nb:
                mb = float(a.mean())
                m2b = float(np.sum((a - mb) ** 2))
                n = self.n + nb
                delta = mb - self.mean
                self.mean += delta * nb / n
                self.m2 += m2b + delta * delta * self.n * nb / n
                self.n = n
        if label is not None:
            self.class_counts += np.bincount(np.asarray(label).ravel(), minlength=len(self.class_counts))[
                : len(self.class_counts)]
        self.n_tiles += 1

    def result(self) -> DatasetStats:
        total = self.class_counts.sum()
        props = self.class_counts / total if total else np.zeros(len(self.class_counts))
        std = float(np.sqrt(self.m2 / self.n)) if self.n else 0.0
        return DatasetStats(float(self.mean), std, props, self.n_tiles, int(self.n))


def dataset_stats(tiles) -> DatasetStats:
    """Statistics over ``(tile_id, style, ndsm, label)`` items.

    ``ndsm``/``label`` may be arrays or zero-argument loaders; loader
    failures are reported and the rest aggregated.
    """
    total = StatsAccumulator()
    styles = {}
    failures = []
    for tile_id, style, ndsm, label in tiles:
        try:
            a = ndsm() if callable(ndsm) else ndsm
            b = label() if callable(label) else label
        except (OSError, ValueError) as exc:
            log.warning("tile %s failed: %s", tile_id, exc)
            failures.append({"tile_id": tile_id, "error": str(exc)})
            continue
        total.update(a, b)
        if style is not None:
            styles.setdefault(style, StatsAccumulator()).update(a, b)
    res = total.result()
    res.per_style = {k: v.result() for k, v in styles.items()}
    res.failures = failures
    return res


# ---------------------------------------------------------------- damage mapping

def damage_map(pre_height, post_height, threshold: float):
    """Pixels whose height dropped by more than ``threshold`` meters."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    check_same_shape(pre_height, post_height, names=["pre_height", "post_height"])
    diff = np.asarray(pre_height, dtype=np.float64) - np.asarray(post_height, dtype=np.float64)
    return (diff > threshold).astype(np.uint8)
