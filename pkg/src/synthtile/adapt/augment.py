"""Strong augmentation for target-domain pseudo-labelling: ClassMix, colour jitter, blur."""
from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from ..rng import SeededRng

IGNORE_INDEX = 255
P_JITTER = 0.8
P_BLUR = 0.5
# jitter strengths and blur sigma range are fixed constants
JITTER_BRIGHTNESS = 0.2
JITTER_CONTRAST = 0.2
JITTER_SATURATION = 0.2
BLUR_SIGMA = (0.1, 2.0)


def classmix(img, labels, donor_img, donor_labels, rng):
    """Paste the pixels of half (rounded up) of the donor's classes onto ``img``.

    Returns ``(img', labels', mask)`` where ``mask`` marks pasted pixels.
    """
    donor_labels = np.asarray(donor_labels)
    classes = np.unique(donor_labels)
    classes = classes[classes != IGNORE_INDEX]
    mask = np.zeros(donor_labels.shape, dtype=bool)
    if classes.size:
        n = math.ceil(classes.size / 2)
        chosen = rng.choice(classes, size=n, replace=False)
        mask = np.isin(donor_labels, chosen)
    img = np.asarray(img)
    m3 = mask[..., None] if img.ndim == 3 else mask
    out_img = np.where(m3, np.asarray(donor_img), img).astype(img.dtype)
    out_lab = np.where(mask, donor_labels, np.asarray(labels)).astype(np.asarray(labels).dtype)
    return out_img, out_lab, mask


def color_jitter(img, rng):
    x = np.asarray(img, dtype=np.float64)
    b = rng.uniform(1 - JITTER_BRIGHTNESS, 1 + JITTER_BRIGHTNESS)
    c = rng.uniform(1 - JITTER_CONTRAST, 1 + JITTER_CONTRAST)
    s = rng.uniform(1 - JITTER_SATURATION, 1 + JITTER_SATURATION)
    x = x * b
    x = (x - x.mean()) * c + x.mean()
    if x.ndim == 3 and x.shape[-1] == 3:
        gray = x @ np.array([0.299, 0.587, 0.114])
        x = (x - gray[..., None]) * s + gray[..., None]
    x = np.clip(x, 0, 255)
    return np.round(x).astype(np.uint8) if np.asarray(img).dtype == np.uint8 else x


def gaussian_blur(img, rng):
    sigma = rng.uniform(*BLUR_SIGMA)
    x = np.asarray(img, dtype=np.float64)
    sig = (sigma, sigma, 0) if x.ndim == 3 else sigma
    out = ndimage.gaussian_filter(x, sig, mode="reflect")
    return np.round(out).astype(np.uint8) if np.asarray(img).dtype == np.uint8 else out


def strong_augment(img, labels, donor_img, donor_labels, seed, p_jitter=P_JITTER, p_blur=P_BLUR,
                   return_mask=False):
    """ClassMix followed by photometric jitter/blur; labels change only where pasted."""
    rng = SeededRng(seed).child("strong-augment").generator()
    out, lab, mask = classmix(img, labels, donor_img, donor_labels, rng)
    if rng.uniform() < p_jitter:
        out = color_jitter(out, rng)
    if rng.uniform() < p_blur:
        out = gaussian_blur(out, rng)
    if return_mask:
        return out, lab, mask
    return out, lab
