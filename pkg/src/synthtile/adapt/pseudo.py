"""Pseudo-label confidence, ground-guided height refinement and height consistency."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .._validation import check_same_shape

TREE, BUILDING = 4, 7
DEFAULT_TAU = 0.95
DEFAULT_ETA = 1.55
DEFAULT_EPS = 0.01


@dataclass
class PseudoLabelBundle:
    labels: np.ndarray  # argmax class ids
    confidence: np.ndarray  # C_LC, uint8 0/1
    height: np.ndarray  # refined height pseudo-labels
    consistency: np.ndarray  # C_H, uint8 0/1


def land_cover_confidence(probs, tau: float = DEFAULT_TAU):
    """Argmax labels and the mask of pixels whose top probability is strictly above ``tau``."""
    p = np.asarray(probs, dtype=np.float64)
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    labels = np.argmax(p, axis=-1).astype(np.uint8)
    conf = (np.max(p, axis=-1) > tau).astype(np.uint8)
    return labels, conf


def ground_mask(labels):
    """1 on every class that cannot carry height (all but tree and building)."""
    lab = np.asarray(labels)
    return (~np.isin(lab, (TREE, BUILDING))).astype(np.uint8)


def refine_height_pseudo(height, labels):
    check_same_shape(height, labels, names=["height", "labels"])
    h = np.asarray(height)
    return h * (1 - ground_mask(labels)).astype(h.dtype)


def height_consistency(h_ori, h_aug, eta: float = DEFAULT_ETA, eps: float = DEFAULT_EPS):
    """1 where ``max(ori/aug, aug/ori) <= eta`` after clamping both below at ``eps``."""
    check_same_shape(h_ori, h_aug, names=["h_ori", "h_aug"])
    if eta <= 1:
        raise ValueError("eta must be > 1")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    a = np.maximum(np.asarray(h_ori, dtype=np.float64), eps)
    b = np.maximum(np.asarray(h_aug, dtype=np.float64), eps)
    return (np.maximum(a / b, b / a) <= eta).astype(np.uint8)


def make_pseudo_bundle(probs, h_ori, h_aug, tau=DEFAULT_TAU, eta=DEFAULT_ETA, eps=DEFAULT_EPS) -> PseudoLabelBundle:
    labels, conf = land_cover_confidence(probs, tau)
    return PseudoLabelBundle(
        labels=labels,
        confidence=conf,
        height=refine_height_pseudo(h_ori, labels),
        consistency=height_consistency(h_ori, h_aug, eta, eps),
    )


class PseudoLabeler(BaseEstimator):
    """Stateless estimator form of :func:`make_pseudo_bundle` for use in pipelines."""

    def __init__(self, tau=DEFAULT_TAU, eta=DEFAULT_ETA, eps=DEFAULT_EPS):
        self.tau = tau
        self.eta = eta
        self.eps = eps

    def fit(self, X=None, y=None):
        return self

    def transform(self, probs, h_ori, h_aug):
        return make_pseudo_bundle(probs, h_ori, h_aug, self.tau, self.eta, self.eps)
