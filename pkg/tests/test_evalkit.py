import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synthtile.evalkit import (
    ETAS,
    HeightEvaluator,
    StatsAccumulator,
    damage_map,
    dataset_stats,
    delta_accuracy,
    evaluate_height,
    f1_he,
    height_errors,
    max_ratio_map,
    seg_iou,
)


# ---------------------------------------------------------------- naive oracles

def naive_errors(pred, gt, high=False):
    s_abs = s_sq = n = 0
    for p, g in zip(pred.ravel().tolist(), gt.ravel().tolist()):
        if high and not g > 3.0:
            continue
        s_abs += abs(p - g)
        s_sq += (p - g) ** 2
        n += 1
    return (s_abs / n, math.sqrt(s_sq / n)) if n else (None, None)


def naive_delta(pred, gt, eta, high=False, eps=0.01):
    hits = n = 0
    for p, g in zip(pred.ravel().tolist(), gt.ravel().tolist()):
        if high and not g > 3.0:
            continue
        p2, g2 = max(p, eps), max(g, eps)
        n += 1
        hits += max(p2 / g2, g2 / p2) < eta
    return hits / n if n else float("nan")


def naive_f1(pred, gt, eta, t=1.0, eps=0.01):
    tp = fp = fn = 0
    for p, g in zip(pred.ravel().tolist(), gt.ravel().tolist()):
        p2, g2 = max(p, eps), max(g, eps)
        if p > t and g > t and max(p2 / g2, g2 / p2) < eta:
            tp += 1
        elif p > t and not g > t:
            fp += 1
        elif not p > t and g > t:
            fn += 1
    if not any(g > t for g in gt.ravel().tolist()):
        return None
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec else 0.0


def naive_iou(pred, gt, k):
    ious = []
    for c in range(k):
        inter = union = 0
        for p, g in zip(pred.ravel().tolist(), gt.ravel().tolist()):
            inter += p == c and g == c
            union += p == c or g == c
        ious.append(inter / union if union else float("nan"))
    present = [v for v in ious if not math.isnan(v)]
    return ious, sum(present) / len(present)


def random_height_pair(rng):
    gt = np.where(rng.random((32, 32)) < 0.5, 0.0, rng.uniform(0, 40, (32, 32)))
    pred = np.where(rng.random((32, 32)) < 0.3, 0.0, gt * rng.uniform(0.5, 1.8, (32, 32)))
    return pred, gt


def test_metrics_match_naive_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        pred, gt = random_height_pair(rng)
        for high in (False, True):
            mae, rmse, _ = height_errors(pred, gt, "high" if high else "whole")
            ref = naive_errors(pred, gt, high)
            if ref[0] is None:
                assert mae is None
            else:
                assert abs(mae - ref[0]) <= 1e-9 and abs(rmse - ref[1]) <= 1e-9
            mask = gt > 3.0 if high else None
            for eta in ETAS:
                assert abs(delta_accuracy(max_ratio_map(pred, gt), eta, mask) - naive_delta(pred, gt, eta, high)) <= 1e-9
        for eta in ETAS:
            got, ref = f1_he(pred, gt, 1.0, eta), naive_f1(pred, gt, eta)
            assert (got is None) == (ref is None)
            if ref is not None:
                assert abs(got - ref) <= 1e-9
        lp, lg = rng.integers(0, 8, (32, 32)), rng.integers(0, 8, (32, 32))
        rep = seg_iou(lp, lg)
        ious, miou = naive_iou(lp, lg, 8)
        np.testing.assert_allclose(rep.iou, ious, atol=1e-9)
        assert abs(rep.miou - miou) <= 1e-9


def test_height_error_examples():
    assert height_errors(np.ones(5), np.ones(5)) == (0.0, 0.0, 5)
    mae, rmse, _ = height_errors(np.array([1.0, 2.0, 3.0]), np.ones(3))
    assert mae == 1.0 and rmse == pytest.approx(math.sqrt(5 / 3))
    assert height_errors(np.ones(4), np.zeros(4), "high").mae is None


@settings(max_examples=100)
@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100)), min_size=1, max_size=50))
def test_rmse_at_least_mae(pairs):
    p, g = np.array(pairs).T
    mae, rmse, _ = height_errors(p, g)
    assert rmse >= mae - 1e-12


def test_delta_examples():
    assert np.all(max_ratio_map(np.full(4, 7.0), np.full(4, 7.0)) == 1.0)
    assert max_ratio_map(np.array([60.0]), np.array([30.0]))[0] == 2.0
    assert max_ratio_map(np.array([0.0]), np.array([0.0]), eps=0.01)[0] == 1.0
    assert delta_accuracy(np.ones(9), 1.01) == 1.0
    assert delta_accuracy(np.full(9, 2.0), 1.25 ** 3) == 0.0
    d = np.random.default_rng(0).uniform(1, 3, 500)
    assert delta_accuracy(d, 1.25) <= delta_accuracy(d, 1.25 ** 2) <= delta_accuracy(d, 1.25 ** 3)


def test_f1_examples():
    gt = np.zeros((10, 10))
    gt[2:6, 2:6] = 30.0
    assert f1_he(np.zeros_like(gt), gt) == 0.0
    for eta in ETAS:
        assert f1_he(2 * gt, gt, 1.0, eta) == 0.0
    assert f1_he(gt, gt) == 1.0
    assert f1_he(gt, np.zeros_like(gt)) is None


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_f1_permutation_invariant_and_monotone(seed):
    rng = np.random.default_rng(seed)
    pred, gt = random_height_pair(rng)
    perm = rng.permutation(pred.size)
    a = f1_he(pred, gt)
    if a is None:
        return
    assert a == pytest.approx(f1_he(pred.ravel()[perm], gt.ravel()[perm]))
    vals = [f1_he(pred, gt, 1.0, e) for e in ETAS]
    assert vals[0] <= vals[1] <= vals[2]


def test_fig_a3_pathologies():
    rng = np.random.default_rng(3)
    gt = np.zeros((50, 50))
    idx = rng.permutation(2500)[:500]  # 20% tall pixels
    gt.flat[idx] = rng.uniform(5, 60, 500)
    zero = evaluate_height(np.zeros_like(gt), gt)
    assert zero.delta_acc["whole"]["1.25"] >= 0.80
    assert all(v == 0.0 for v in zero.f1_he.values())
    doubled = evaluate_height(2 * gt, gt)
    assert all(v == 0.0 for v in doubled.f1_he.values())


def test_seg_examples():
    a = np.array([[0, 1], [2, 3]])
    rep = seg_iou(a, a, 4)
    assert np.all(rep.iou == 1.0) and rep.miou == 1.0
    pred = np.array([[1, 1], [0, 0]])
    gt = np.array([[0, 0], [1, 1]])
    assert seg_iou(pred, gt, 2).iou[1] == 0.0
    # cells 1,2 vs 2,3 in a 2x2 grid (row-major 0..3)
    pred = np.array([[0, 1], [1, 0]])
    gt = np.array([[0, 0], [1, 1]])
    assert seg_iou(pred, gt, 2).iou[1] == pytest.approx(1 / 3)
    assert math.isnan(seg_iou(np.zeros((2, 2), int), np.zeros((2, 2), int), 3).iou[2])


def test_miou_permutation_equivariant():
    rng = np.random.default_rng(8)
    p, g = rng.integers(0, 8, (20, 20)), rng.integers(0, 6, (20, 20))
    perm = rng.permutation(8)
    assert seg_iou(perm[p], perm[g]).miou == pytest.approx(seg_iou(p, g).miou, abs=1e-12)


def test_evaluator_pools_pixels():
    rng = np.random.default_rng(1)
    ev = HeightEvaluator()
    pairs = [random_height_pair(rng) for _ in range(4)]
    per = [ev.update(p, g) for p, g in pairs]
    rep = ev.report()
    n = [r["whole"]["n_pixels"] for r in per]
    pooled = sum(r["whole"]["mae"] * k for r, k in zip(per, n)) / sum(n)
    assert rep.mae_whole == pytest.approx(pooled, abs=1e-12)
    allp = np.concatenate([p.ravel() for p, _ in pairs])
    allg = np.concatenate([g.ravel() for _, g in pairs])
    assert rep.rmse_whole == pytest.approx(naive_errors(allp, allg)[1], abs=1e-9)
    f1s = [naive_f1(p, g, ETAS[0]) for p, g in pairs]
    f1s = [v for v in f1s if v is not None]
    assert rep.f1_he["1.25"] == pytest.approx(np.mean(f1s), abs=1e-12)
    d = rep.to_dict()
    assert set(d["whole"]) == {"mae", "rmse", "delta", "f1_he"} and set(d["high"]) == {"mae", "rmse", "delta"}


def test_dataset_stats_hand_counts():
    nd1 = np.array([[0.0, 2.0], [4.0, 6.0]])
    nd2 = np.array([[1.0, 1.0], [1.0, 1.0]])
    l1 = np.array([[0, 7], [7, 4]])
    l2 = np.array([[3, 3], [3, 0]])
    st_ = dataset_stats([("a", "s0", nd1, l1), ("b", "s1", lambda: nd2, lambda: l2)])
    allv = np.concatenate([nd1.ravel(), nd2.ravel()])
    assert st_.height_mean == pytest.approx(allv.mean()) and st_.height_std == pytest.approx(allv.std())
    expected = np.bincount(np.concatenate([l1.ravel(), l2.ravel()]), minlength=8) / 8
    np.testing.assert_allclose(st_.class_proportions, expected)
    assert st_.class_proportions.sum() == pytest.approx(1.0, abs=1e-9)
    assert set(st_.per_style) == {"s0", "s1"} and st_.per_style["s1"].height_std == 0.0
    zero = dataset_stats([("z", None, np.zeros((3, 3)), None)])
    assert zero.height_mean == 0.0 and zero.height_std == 0.0


def test_stats_accumulator_matches_numpy():
    rng = np.random.default_rng(4)
    acc = StatsAccumulator()
    chunks = [rng.normal(5, 3, rng.integers(1, 200)) for _ in range(30)]
    for c in chunks:
        acc.update(c)
    allv = np.concatenate(chunks)
    r = acc.result()
    assert r.height_mean == pytest.approx(allv.mean(), abs=1e-10)
    assert r.height_std == pytest.approx(allv.std(), abs=1e-10)


def test_stats_tolerates_failures():
    def broken():
        raise OSError("nope")

    s = dataset_stats([("a", None, broken, None), ("b", None, np.ones((2, 2)), None)])
    assert s.n_tiles == 1 and s.failures[0]["tile_id"] == "a"


def test_damage_examples():
    pre = np.zeros((8, 8))
    pre[2:5, 2:5] = 10.0
    assert not damage_map(pre, pre, 3.0).any()
    m = damage_map(pre, np.zeros_like(pre), 3.0)
    assert np.array_equal(m.astype(bool), pre > 0)
    assert not damage_map(np.full((4, 4), 5.8), np.full((4, 4), 5.0), 1.0).any()
