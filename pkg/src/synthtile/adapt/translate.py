"""Statistical image translation of source images toward a target-domain reference."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .._validation import check_fraction
from ..exceptions import EmptyReference

MODES = ("histogram_match", "pixel_distribution")
_MODE_ALIASES = {"hm": "histogram_match", "pda": "pixel_distribution"}


def _as_channels(img):
    a = np.asarray(img, dtype=np.float64)
    return a[..., None] if a.ndim == 2 else a


def _check_reference(ref):
    r = _as_channels(ref)
    if r.size == 0:
        raise EmptyReference("reference image is empty")
    return r


def _channel_quantiles(ref):
    """Sorted reference values per channel; the empirical quantile function."""
    return [np.sort(ref[..., c].ravel()) for c in range(ref.shape[-1])]


def _match_channel(src, ref_sorted):
    # Map each source value through its empirical CDF, then invert the reference CDF.
    values, inverse, counts = np.unique(src.ravel(), return_inverse=True, return_counts=True)
    src_q = (np.cumsum(counts) - 0.5 * counts) / src.size
    ref_q = (np.arange(ref_sorted.size) + 0.5) / ref_sorted.size
    mapped = np.interp(src_q, ref_q, ref_sorted)
    return mapped[inverse].reshape(src.shape)


def histogram_match(src, ref):
    """Per-channel histogram matching of ``src`` onto ``ref`` (float output)."""
    s = _as_channels(src)
    r = _check_reference(ref)
    if s.shape[-1] != r.shape[-1]:
        raise ValueError("src and ref need the same number of channels")
    out = np.stack([_match_channel(s[..., c], q) for c, q in enumerate(_channel_quantiles(r))], axis=-1)
    return out.reshape(np.shape(src))


def pixel_distribution_match(src, ref):
    """Standardize each source channel, then rescale to the reference mean and std."""
    s = _as_channels(src)
    r = _check_reference(ref)
    mu_s = s.reshape(-1, s.shape[-1]).mean(0)
    sd_s = s.reshape(-1, s.shape[-1]).std(0)
    mu_r = r.reshape(-1, r.shape[-1]).mean(0)
    sd_r = r.reshape(-1, r.shape[-1]).std(0)
    out = (s - mu_s) / np.where(sd_s > 0, sd_s, 1.0) * sd_r + mu_r
    return out.reshape(np.shape(src))


def _finish(src, mapped, blend):
    out = blend * mapped + (1.0 - blend) * np.asarray(src, dtype=np.float64)
    out = np.clip(out, 0.0, 255.0)
    if np.asarray(src).dtype == np.uint8:
        return np.round(out).astype(np.uint8)
    return out


def translate_image(src, ref, mode="histogram_match", blend=1.0):
    """Blend ``src`` with its statistically translated version; output clamped to [0, 255].

    ``blend = 0`` returns the source unchanged.
    """
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    blend = check_fraction(blend, "blend")
    if blend == 0.0:
        _check_reference(ref)
        return np.array(src, copy=True)
    mapped = histogram_match(src, ref) if mode == "histogram_match" else pixel_distribution_match(src, ref)
    return _finish(src, mapped, blend)


class _ReferenceTranslator(TransformerMixin, BaseEstimator):
    def __init__(self, blend=1.0):
        self.blend = blend

    def fit(self, X, y=None):
        """Fit on one reference image or a sequence of them (pixels are pooled)."""
        refs = [X] if isinstance(X, np.ndarray) and X.ndim in (2, 3) else list(X)
        if not refs:
            raise EmptyReference("no reference images")
        pooled = np.concatenate([_as_channels(r).reshape(-1, _as_channels(r).shape[-1]) for r in refs])
        if pooled.size == 0:
            raise EmptyReference("reference images are empty")
        self._fit_pooled(pooled)
        self.n_channels_ = pooled.shape[1]
        return self

    def transform(self, X):
        if isinstance(X, np.ndarray) and X.ndim in (2, 3):
            return self._transform_one(X)
        return [self._transform_one(x) for x in X]

    def _transform_one(self, img):
        blend = check_fraction(self.blend, "blend")
        if blend == 0.0:
            return np.array(img, copy=True)
        return _finish(img, self._map(img), blend)


class HistogramMatcher(_ReferenceTranslator):
    """Per-channel histogram matching toward the fitted reference pixels."""

    def _fit_pooled(self, pooled):
        self.quantiles_ = [np.sort(pooled[:, c]) for c in range(pooled.shape[1])]

    def _map(self, img):
        s = _as_channels(img)
        out = np.stack([_match_channel(s[..., c], q) for c, q in enumerate(self.quantiles_)], axis=-1)
        return out.reshape(np.shape(img))


class PixelDistributionMatcher(_ReferenceTranslator):
    """Standard-scaling toward the fitted reference channel mean and std."""

    def _fit_pooled(self, pooled):
        self.mean_ = pooled.mean(0)
        self.scale_ = pooled.std(0)

    def _map(self, img):
        s = _as_channels(img)
        flat = s.reshape(-1, s.shape[-1])
        mu, sd = flat.mean(0), flat.std(0)
        out = (s - mu) / np.where(sd > 0, sd, 1.0) * self.scale_ + self.mean_
        return out.reshape(np.shape(img))
