import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synthtile.adapt import (
    EmaTeacher,
    HistogramMatcher,
    LossWeights,
    PixelDistributionMatcher,
    PseudoLabelBundle,
    PseudoLabeler,
    adaptation_loss,
    classmix,
    cross_entropy,
    ema_update,
    feature_alignment_loss,
    ground_mask,
    height_consistency,
    land_cover_confidence,
    make_pseudo_bundle,
    refine_height_pseudo,
    smooth_l1,
    smooth_l1_grad,
    strong_augment,
    supervised_loss,
    total_loss,
    translate_image,
)
from synthtile.exceptions import EmptyReference, LengthMismatch, ZeroVector


def histogram_emd(a, b):
    """1-D earth mover's distance between 8-bit histograms on a [0, 1] value axis."""
    ha = np.bincount(a.ravel(), minlength=256) / a.size
    hb = np.bincount(b.ravel(), minlength=256) / b.size
    return float(np.abs(np.cumsum(ha) - np.cumsum(hb)).sum()) / 256


def skewed_image(rng, shape, gamma):
    return (255 * rng.random(shape) ** gamma).astype(np.uint8)


# ---------------------------------------------------------------- translation

def test_blend_zero_is_identity(rng):
    src = skewed_image(rng, (16, 16, 3), 2.0)
    ref = skewed_image(rng, (20, 20, 3), 0.5)
    for mode in ("hm", "pda"):
        assert np.array_equal(translate_image(src, ref, mode, 0.0), src)


def test_hm_constant_reference(rng):
    src = skewed_image(rng, (16, 16, 3), 1.0)
    ref = np.full((5, 5, 3), 77, np.uint8)
    assert np.all(translate_image(src, ref, "histogram_match", 1.0) == 77)


@pytest.mark.parametrize("seed", range(5))
def test_hm_reduces_emd(seed):
    rng = np.random.default_rng(seed)
    src = skewed_image(rng, (64, 64, 3), 1.5)
    ref = skewed_image(rng, (80, 48, 3), 0.4)
    out = translate_image(src, ref, "hm", 1.0)
    for c in range(3):
        assert histogram_emd(out[..., c], ref[..., c]) < 2 / 256 < histogram_emd(src[..., c], ref[..., c])


def test_hm_emd_on_rendered_tiles():
    from conftest import plan_with
    from synthtile.render import build_camera, render
    from synthtile.scenegen import generate_scene

    a_plan, b_plan = plan_with("style-2", 1, 96), plan_with("style-5", 2, 96)
    src = render(generate_scene(a_plan), build_camera(a_plan.sensor), a_plan.sun).rgb
    ref = render(generate_scene(b_plan), build_camera(b_plan.sensor), b_plan.sun, texture_seed=99).rgb
    out = translate_image(src, ref, "hm", 1.0)
    for c in range(3):
        assert histogram_emd(out[..., c], ref[..., c]) < 2 / 256


def test_hm_tied_source_mass_is_not_split(rng):
    # a per-value mapping sends every tied pixel to one output value
    src = np.zeros((10, 10), np.uint8)
    src[5:] = 100
    ref = np.arange(100, dtype=np.uint8).reshape(10, 10)
    out = translate_image(src, ref, "hm", 1.0)
    assert len(np.unique(out[:5])) == 1 and len(np.unique(out[5:])) == 1
    assert out[0, 0] < out[9, 9]


def test_pda_moments(rng):
    src = rng.uniform(60, 140, (40, 40, 3))
    ref = rng.normal(128, 20, (30, 30, 3)).clip(40, 215)
    out = translate_image(src, ref, "pda", 1.0)
    for c in range(3):
        assert abs(out[..., c].mean() - ref[..., c].mean()) <= 0.5 / 255 * 255
        assert abs(out[..., c].std() - ref[..., c].std()) <= 0.5 / 255 * 255


def test_translate_validation(rng):
    src = skewed_image(rng, (8, 8, 3), 1.0)
    with pytest.raises(EmptyReference):
        translate_image(src, np.zeros((0, 0, 3)), "hm", 0.5)
    with pytest.raises(ValueError):
        translate_image(src, src, "nope", 0.5)
    with pytest.raises(ValueError):
        translate_image(src, src, "hm", 1.5)


def test_matcher_estimators(rng):
    refs = [rng.normal(130, 25, (32, 32, 3)).clip(0, 255).astype(np.uint8) for _ in range(3)]
    src = rng.uniform(100, 160, (32, 32, 3)).round().astype(np.uint8)
    hm = HistogramMatcher(blend=1.0).fit(refs)
    pooled = np.concatenate([r.reshape(-1, 3) for r in refs])
    out = hm.transform(src)
    assert out.dtype == np.uint8
    assert histogram_emd(out[..., 0], pooled[:, 0]) < 2 / 256
    pda = PixelDistributionMatcher(blend=1.0).fit(refs)
    outs = pda.transform([src.astype(float)])
    np.testing.assert_allclose(outs[0].reshape(-1, 3).mean(0), pooled.mean(0), atol=0.5)
    assert np.array_equal(HistogramMatcher(blend=0.0).fit(refs).transform(src), src)
    with pytest.raises(EmptyReference):
        HistogramMatcher().fit([])


# ---------------------------------------------------------------- augmentation

def test_classmix_empty_donor(rng):
    img = skewed_image(rng, (8, 8, 3), 1.0)
    lab = rng.integers(0, 8, (8, 8))
    out, out_lab, mask = classmix(img, lab, img[::-1], np.full((8, 8), 255), rng)
    assert np.array_equal(out, img) and np.array_equal(out_lab, lab) and not mask.any()


def test_classmix_pastes_half_the_classes(rng):
    img = np.zeros((16, 16, 3), np.uint8)
    donor = np.full((16, 16, 3), 200, np.uint8)
    donor_lab = np.repeat(np.arange(4), 64).reshape(16, 16)
    out, lab, mask = classmix(img, np.zeros((16, 16), int), donor, donor_lab, rng)
    assert len(np.unique(donor_lab[mask])) == 2
    assert np.array_equal(lab[mask], donor_lab[mask])
    assert np.all(out[mask] == 200) and np.all(out[~mask] == 0)


def test_strong_augment_deterministic_and_label_exact(rng):
    img = skewed_image(rng, (24, 24, 3), 1.0)
    lab = rng.integers(0, 8, (24, 24))
    donor = skewed_image(rng, (24, 24, 3), 0.5)
    dlab = rng.integers(0, 8, (24, 24))
    a = strong_augment(img, lab, donor, dlab, 5, return_mask=True)
    b = strong_augment(img, lab, donor, dlab, 5, return_mask=True)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    out, out_lab, mask = a
    assert np.array_equal(out_lab[mask], dlab[mask])
    assert np.array_equal(out_lab[~mask], lab[~mask])
    assert out.dtype == np.uint8


# ---------------------------------------------------------------- pseudo labels

def test_land_cover_confidence_cases():
    onehot = np.eye(8)[np.arange(16).reshape(4, 4) % 8]
    labels, c = land_cover_confidence(onehot, 0.95)
    assert c.all() and np.array_equal(labels, np.arange(16).reshape(4, 4) % 8)
    _, c = land_cover_confidence(np.full((3, 3, 8), 0.125), 0.95)
    assert not c.any()
    edge = np.zeros((1, 2, 8))
    edge[0, 0, 7], edge[0, 0, 0] = 0.95, 0.05
    edge[0, 1, 7], edge[0, 1, 0] = 0.951, 0.049
    _, c = land_cover_confidence(edge, 0.95)
    assert c.tolist() == [[0, 1]]


def test_refine_height_cases(rng):
    h = rng.uniform(0, 30, (6, 6))
    assert np.array_equal(refine_height_pseudo(h, np.full((6, 6), 7)), h)
    assert not refine_height_pseudo(h, np.full((6, 6), 3)).any()
    lab = rng.integers(0, 8, (6, 6))
    r = refine_height_pseudo(h, lab)
    keep = np.isin(lab, (4, 7))
    assert np.all(r[~keep] == 0) and np.array_equal(r[keep], h[keep])
    assert np.array_equal(refine_height_pseudo(r, lab), r)
    g = ground_mask(lab)
    assert np.array_equal(ground_mask(lab), g) and set(np.unique(g)) <= {0, 1}


def test_height_consistency_cases(rng):
    h = rng.uniform(0, 20, (8, 8))
    assert height_consistency(h, h, 1.55).all()
    pos = h > 0.5
    aug = np.where(pos, 1.6 * h, h)
    c = height_consistency(h, aug, 1.55)
    assert not c[pos].any() and c[~pos].all()
    assert height_consistency(np.zeros((2, 2)), np.zeros((2, 2))).all()
    assert np.array_equal(height_consistency(h, aug), height_consistency(aug, h))


def test_height_consistency_flags_exactly_ratio_above_eta():
    h = np.array([1.0, 2.0, 4.0, 10.0, 0.0, 0.005])
    aug = np.array([1.5, 3.2, 4.0, 15.6, 0.0, 0.02])
    ratios = np.maximum(np.maximum(h, 0.01) / np.maximum(aug, 0.01), np.maximum(aug, 0.01) / np.maximum(h, 0.01))
    assert height_consistency(h, aug, 1.55).tolist() == (ratios <= 1.55).astype(int).tolist()


def test_pseudo_labeler_matches_bundle(rng):
    probs = rng.dirichlet(np.ones(8) * 0.1, (5, 5))
    h, ha = rng.uniform(0, 9, (5, 5)), rng.uniform(0, 9, (5, 5))
    a = make_pseudo_bundle(probs, h, ha)
    b = PseudoLabeler().fit().transform(probs, h, ha)
    for f in ("labels", "confidence", "height", "consistency"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


# ---------------------------------------------------------------- losses

def onehot(labels, k=8):
    return np.eye(k)[labels]


def test_supervised_loss_examples(rng):
    lab = rng.integers(0, 8, (2, 6, 6))
    h = rng.uniform(0, 10, (2, 6, 6))
    assert supervised_loss(onehot(lab), h, lab, h) < 1e-6
    assert supervised_loss(onehot(lab), h + 0.5, lab, h) == pytest.approx(0.125)
    assert supervised_loss(onehot(lab), h + 2.0, lab, h) == pytest.approx(1.5)


def test_smooth_l1_gradient_finite_difference(rng):
    p, t = rng.normal(0, 2, 500), rng.normal(0, 2, 500)
    # the derivative is continuous at |r| = 1, but keep finite differences off the kink
    p = np.where(np.abs(np.abs(p - t) - 1.0) < 1e-3, p + 0.01, p)
    h = 1e-6
    fd = (smooth_l1(p + h, t) - smooth_l1(p - h, t)) / (2 * h)
    np.testing.assert_allclose(smooth_l1_grad(p, t), fd, atol=1e-5)


def _bundle(rng, shape=(2, 5, 5)):
    return PseudoLabelBundle(labels=rng.integers(0, 8, shape), confidence=(rng.random(shape) < 0.5).astype(np.uint8),
                             height=rng.uniform(0, 5, shape), consistency=(rng.random(shape) < 0.5).astype(np.uint8))


def test_adaptation_loss_cases(rng):
    probs = rng.dirichlet(np.ones(8), (2, 5, 5))
    h = rng.uniform(0, 5, (2, 5, 5))
    b = _bundle(rng)
    zero = PseudoLabelBundle(b.labels, np.zeros_like(b.confidence), b.height, np.zeros_like(b.consistency))
    assert adaptation_loss(probs, h, zero) == 0.0
    ce_only = PseudoLabelBundle(b.labels, np.ones_like(b.confidence), b.height, np.zeros_like(b.consistency))
    ce = cross_entropy(probs, b.labels).reshape(2, -1).mean(1).mean()
    assert adaptation_loss(probs, h, ce_only) == pytest.approx(ce)
    ones = PseudoLabelBundle(b.labels, np.ones_like(b.confidence), b.height, np.ones_like(b.consistency))
    assert adaptation_loss(probs, h, ones) == pytest.approx(supervised_loss(probs, h, b.labels, b.height))


def test_adaptation_loss_brute_force(rng):
    probs = rng.dirichlet(np.ones(8), (3, 4, 4))
    h = rng.uniform(0, 5, (3, 4, 4))
    b = _bundle(rng, (3, 4, 4))
    total = 0.0
    for n in range(3):
        ce_s = ce_n = reg_s = reg_n = 0.0
        for i in range(4):
            for j in range(4):
                if b.confidence[n, i, j]:
                    ce_s += -math.log(probs[n, i, j, b.labels[n, i, j]])
                    ce_n += 1
                if b.consistency[n, i, j]:
                    r = abs(h[n, i, j] - b.height[n, i, j])
                    reg_s += 0.5 * r * r if r < 1 else r - 0.5
                    reg_n += 1
        total += ce_s / max(ce_n, 1) + reg_s / max(reg_n, 1)
    assert adaptation_loss(probs, h, b) == pytest.approx(total / 3, abs=1e-12)


def test_feature_alignment_cases():
    assert feature_alignment_loss([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert feature_alignment_loss([1.0, 0.0], [0.0, 3.0], 0.8) == 1.0
    v = np.array([0.9, math.sqrt(1 - 0.81)])
    assert feature_alignment_loss(v, [1.0, 0.0], 0.8) == 0.0
    with pytest.raises(ZeroVector):
        feature_alignment_loss([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(LengthMismatch):
        feature_alignment_loss([1.0], [1.0, 0.0])


@settings(max_examples=100)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), c=st.floats(-10, 10), k=st.floats(-3, 3))
def test_total_loss_linear(a, b, c, k):
    w = LossWeights(lambda_target=1.0, lambda_feat=1.0)
    assert total_loss(1.0, 2.0, 3.0, w) == 6.0
    assert total_loss(a, 0.0, 0.0, LossWeights(0.0, 0.0)) == a
    base = total_loss(a, b, c, w)
    assert total_loss(a + k, b, c, w) == pytest.approx(base + k, abs=1e-9)
    assert total_loss(a, b + k, c, w) == pytest.approx(base + k, abs=1e-9)
    assert total_loss(a, b, c + k, w) == pytest.approx(base + k, abs=1e-9)


def test_ema_cases(rng):
    t, s = rng.normal(size=10), rng.normal(size=10)
    assert np.array_equal(ema_update(t, s, 1.0), t)
    assert np.array_equal(ema_update(t, t, 0.99), t)
    assert ema_update([0.0], [1.0], 0.99)[0] == pytest.approx(0.01)
    teacher = EmaTeacher(np.zeros(3), 0.99)
    target = np.ones(3)
    for k in range(1, 50):
        teacher.update(target)
        assert np.allclose(target - teacher.params, 0.99 ** k, atol=1e-12)
    with pytest.raises(LengthMismatch):
        ema_update(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        ema_update(t, s, 1.5)
