"""Loss terms and teacher averaging on plain arrays.

Probability maps are ``(N, H, W, C)`` (or a single ``(H, W, C)``), heights
``(N, H, W)``. Each loss is averaged per sample, then over samples.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import LengthMismatch, ZeroVector

SMOOTH_L1_BETA = 1.0
_LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class LossWeights:
    lambda_target: float = 1.0
    lambda_feat: float = 1.0
    tau: float = 0.95
    eta: float = 1.55
    epsilon: float = 0.8

    def __post_init__(self):
        if self.lambda_target < 0 or self.lambda_feat < 0:
            raise ValueError("loss weights must be >= 0")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.eta <= 1:
            raise ValueError("eta must be > 1")
        if not -1 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (-1, 1)")


def cross_entropy(probs, labels):
    """Per-pixel negative log-probability of the target class."""
    p = np.asarray(probs, dtype=np.float64)
    lab = np.asarray(labels).astype(np.int64)
    picked = np.take_along_axis(p, lab[..., None], axis=-1)[..., 0]
    return -np.log(np.maximum(picked, _LOG_FLOOR))


def smooth_l1(pred, target, beta: float = SMOOTH_L1_BETA):
    r = np.abs(np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64))
    return np.where(r < beta, 0.5 * r * r / beta, r - 0.5 * beta)


def smooth_l1_grad(pred, target, beta: float = SMOOTH_L1_BETA):
    """Derivative of :func:`smooth_l1` with respect to ``pred``."""
    r = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return np.where(np.abs(r) < beta, r / beta, np.sign(r))


def _batched(probs, *maps):
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim == 3:
        return (p[None],) + tuple(np.asarray(m)[None] for m in maps)
    return (p,) + tuple(np.asarray(m) for m in maps)


def supervised_loss(pred_probs, pred_height, gt_labels, gt_height):
    p, h, lab, gh = _batched(pred_probs, pred_height, gt_labels, gt_height)
    ce = cross_entropy(p, lab).reshape(len(p), -1).mean(1)
    reg = smooth_l1(h, gh).reshape(len(p), -1).mean(1)
    return float(np.mean(ce + reg))


def _masked_mean(values, mask):
    v = values.reshape(len(values), -1)
    m = np.asarray(mask, dtype=np.float64).reshape(len(values), -1)
    return (v * m).sum(1) / np.maximum(m.sum(1), 1.0)


def adaptation_loss(pred_probs, pred_height, pseudo):
    """Confidence-masked CE plus consistency-masked smooth-L1, each averaged over selected pixels."""
    p, h, lab, ph, c_lc, c_h = _batched(pred_probs, pred_height, pseudo.labels, pseudo.height,
                                        pseudo.confidence, pseudo.consistency)
    ce = _masked_mean(cross_entropy(p, lab), c_lc)
    reg = _masked_mean(smooth_l1(h, ph), c_h)
    return float(np.mean(ce + reg))


def feature_alignment_loss(f, f_ref, epsilon: float = 0.8):
    """``1 - cos(f, f_ref)`` while the cosine is below ``epsilon``, else 0."""
    a = np.asarray(f, dtype=np.float64).ravel()
    b = np.asarray(f_ref, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise LengthMismatch("feature vectors differ in length")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVector("feature vector has zero norm")
    cos = float(a @ b / (na * nb))
    return 1.0 - cos if cos < epsilon else 0.0


def total_loss(l_source, l_target, l_feat, weights: LossWeights = LossWeights()):
    return l_source + weights.lambda_target * l_target + weights.lambda_feat * l_feat


def ema_update(theta_t, theta_s, alpha: float = 0.99):
    t = np.asarray(theta_t, dtype=np.float64)
    s = np.asarray(theta_s, dtype=np.float64)
    if t.shape != s.shape:
        raise LengthMismatch(f"parameter vectors differ: {t.shape} vs {s.shape}")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    return alpha * t + (1.0 - alpha) * s


class EmaTeacher:
    """Holds teacher parameters; not thread-safe, callers serialize updates."""

    def __init__(self, params, alpha=0.99):
        self.params = np.array(params, dtype=np.float64)
        self.alpha = alpha
        self.steps = 0

    def update(self, student_params):
        self.params = ema_update(self.params, student_params, self.alpha)
        self.steps += 1
        return self.params
