"""Array-level numerics for synthetic-to-real adaptation: image translation,
strong augmentation, pseudo-label refinement, losses and EMA averaging."""
from .augment import classmix, color_jitter, gaussian_blur, strong_augment
from .losses import (
    LossWeights,
    adaptation_loss,
    cross_entropy,
    ema_update,
    EmaTeacher,
    feature_alignment_loss,
    smooth_l1,
    smooth_l1_grad,
    supervised_loss,
    total_loss,
)
from .pseudo import (
    PseudoLabelBundle,
    PseudoLabeler,
    ground_mask,
    height_consistency,
    land_cover_confidence,
    make_pseudo_bundle,
    refine_height_pseudo,
)
from .translate import HistogramMatcher, PixelDistributionMatcher, histogram_match, pixel_distribution_match, translate_image

__all__ = [
    "EmaTeacher", "HistogramMatcher", "LossWeights", "PixelDistributionMatcher", "PseudoLabelBundle",
    "PseudoLabeler", "adaptation_loss", "classmix", "color_jitter", "cross_entropy", "ema_update",
    "feature_alignment_loss", "gaussian_blur", "ground_mask", "height_consistency", "histogram_match",
    "land_cover_confidence", "make_pseudo_bundle", "pixel_distribution_match", "refine_height_pseudo",
    "smooth_l1", "smooth_l1_grad", "strong_augment", "supervised_loss", "total_loss", "translate_image",
]
