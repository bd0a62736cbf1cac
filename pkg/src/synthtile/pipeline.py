"""Reproducible runs: generation, filtering, statistics, evaluation and adaptation preprocessing."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io as rio
from .adapt.pseudo import make_pseudo_bundle
from .adapt.translate import translate_image
from .config import JobConfig
from .evalkit import HeightEvaluator, dataset_stats, damage_map, seg_iou, seg_report_from_confusion
from .exceptions import EmptyDataset, LayoutInfeasible
from .filter import FilterParams, FilterReport, filter_dataset, filter_tile, tile_stream
from .paramgen import sample_tile_plan
from .render import CLASS_NAMES, build_camera, change_mask, render_pair
from .rng import SeededRng
from .scenegen import derive_pre_event, generate_scene

log = logging.getLogger(__name__)

MAX_PLAN_RESAMPLES = 16
MANIFEST = "manifest.json"
FILTER_REPORT = "filter_report.jsonl"

TILE_FILES = {
    "post_rgb": "post/rgb/{}.png",
    "post_label": "post/label/{}.png",
    "post_ndsm": "post/ndsm/{}.f32",
    "post_ndsm_sidecar": "post/ndsm/{}.json",
    "post_building": "post/building/{}.png",
    "pre_rgb": "pre/rgb/{}.png",
    "pre_building": "pre/building/{}.png",
    "change": "change/{}.png",
}


def tile_id_for(index: int) -> str:
    return f"{index:06d}"


def tile_seed_for(global_seed: int, index: int) -> int:
    return SeededRng(global_seed).child("tile").child(int(index)).integer_seed()


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


# ---------------------------------------------------------------- generate

def build_tile(index: int, config: JobConfig):
    """Plan, scene, pre-event variant and both renders for one tile (no I/O)."""
    base = tile_seed_for(config.seed, index)
    for attempt in range(MAX_PLAN_RESAMPLES):
        seed = (base + attempt) & ((1 << 64) - 1)
        plan = sample_tile_plan(seed, config.presets, config.bounds)
        try:
            scene = generate_scene(plan)
            break
        except LayoutInfeasible:
            log.debug("tile %d: layout infeasible for seed %d, resampling", index, seed)
    else:
        raise LayoutInfeasible(f"tile {index}: no feasible plan after {MAX_PLAN_RESAMPLES} attempts")
    pre_scene = derive_pre_event(scene, plan.removal_fraction, seed)
    tex_post = seed ^ config.texture_seed_xor
    tex_pre = SeededRng(tex_post).child("pre-event").integer_seed()
    post, pre = render_pair(scene, pre_scene, build_camera(plan.sensor), plan.sun, tex_post, tex_pre)
    return plan, scene, pre_scene, post, pre


def _generate_one(args):
    index, config, root = args
    tile_id = tile_id_for(index)
    try:
        plan, scene, pre_scene, post, pre = build_tile(index, config)
        decision = filter_tile(post.ndsm, config.filter, tile_stream(config.seed, tile_id))
        record = {
            "tile_id": tile_id,
            "seed": plan.seed,
            "style": plan.style.name,
            "regime": plan.style.height_regime,
            "sensor": dataclasses.asdict(plan.sensor),
            "n_buildings": len(scene.buildings),
            "removed_buildings": list(pre_scene.removed_ids),
            "filter": {"p_c": decision.p_c, "pr": decision.pr, "kept": decision.keep},
        }
        if decision.keep:
            paths = {k: v.format(tile_id) for k, v in TILE_FILES.items()}
            for rel in paths.values():
                (root / rel).parent.mkdir(parents=True, exist_ok=True)
            rio.write_rgb(root / paths["post_rgb"], post.rgb)
            rio.write_label(root / paths["post_label"], post.label)
            rio.write_f32(root / paths["post_ndsm"], post.ndsm, gsd_m=plan.sensor.gsd, seed=plan.seed,
                          style=plan.style.name)
            rio.write_mask(root / paths["post_building"], post.building_mask)
            rio.write_rgb(root / paths["pre_rgb"], pre.rgb)
            rio.write_mask(root / paths["pre_building"], pre.building_mask)
            rio.write_mask(root / paths["change"], change_mask(post.building_mask, pre.building_mask))
            record["files"] = paths
            record["hashes"] = {k: rio.sha256_file(root / p) for k, p in paths.items()}
        return record
    except Exception as exc:  # best effort per tile
        log.error("tile %s failed: %s", tile_id, exc)
        return {"tile_id": tile_id, "error": f"{type(exc).__name__}: {exc}"}


def _record_verifies(root, record):
    if not record.get("filter", {}).get("kept"):
        return True
    try:
        return all(rio.sha256_file(root / p) == record["hashes"][k] for k, p in record["files"].items())
    except (OSError, KeyError):
        return False


def run_generate(config: JobConfig, out_dir=None, workers=None):
    """Generate ``config.count`` tiles; returns ``(manifest, exit_code)``.

    Rerunning into an existing run root reuses tiles whose manifest record and
    file hashes still verify.
    """
    root = Path(out_dir or config.out or "out")
    root.mkdir(parents=True, exist_ok=True)
    workers = workers or config.workers
    config_hash = config.content_hash()

    previous = {}
    manifest_path = root / MANIFEST
    if manifest_path.exists():
        try:
            old = json.loads(manifest_path.read_text())
            if old.get("config_hash") == config_hash:
                for rec in old.get("tiles", []) + old.get("rejected", []):
                    previous[rec["tile_id"]] = rec
        except (OSError, ValueError):
            pass

    todo, records = [], []
    for i in range(config.count):
        rec = previous.get(tile_id_for(i))
        if rec is not None and _record_verifies(root, rec):
            records.append(rec)
        else:
            todo.append((i, config, root))

    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records += list(pool.map(_generate_one, todo))
    else:
        records += [_generate_one(t) for t in todo]
    records.sort(key=lambda r: r["tile_id"])

    failures = [r for r in records if "error" in r]
    ok = [r for r in records if "error" not in r]
    with open(root / FILTER_REPORT, "w") as fh:
        for r in ok:
            fh.write(json.dumps({"tile_id": r["tile_id"], **r["filter"]}, sort_keys=True) + "\n")
    manifest = {
        "version": __version__,
        "config_hash": config_hash,
        "seed": config.seed,
        "count": config.count,
        "tiles": [r for r in ok if r["filter"]["kept"]],
        "rejected": [r for r in ok if not r["filter"]["kept"]],
        "failures": failures,
        "run_files": [FILTER_REPORT],
    }
    _write_json(manifest_path, manifest)
    return manifest, (1 if failures else 0)


def verify_manifest(root):
    """Problems found comparing the manifest with the files on disk (empty list = consistent)."""
    root = Path(root)
    manifest = json.loads((root / MANIFEST).read_text())
    problems = []
    referenced = {MANIFEST, *manifest.get("run_files", [])}
    for rec in manifest["tiles"]:
        for key, rel in rec["files"].items():
            if rel in referenced:
                problems.append(f"{rel} referenced twice")
            referenced.add(rel)
            p = root / rel
            if not p.exists():
                problems.append(f"{rel} missing")
            elif rio.sha256_file(p) != rec["hashes"][key]:
                problems.append(f"{rel} hash mismatch")
    on_disk = {str(p.relative_to(root)) for p in root.rglob("*") if p.is_file()}
    problems += [f"{rel} not in manifest" for rel in sorted(on_disk - referenced)]
    return problems


# ---------------------------------------------------------------- filter

def find_ndsm_files(in_dir):
    d = Path(in_dir)
    base = d / "post" / "ndsm"
    files = sorted(base.glob("*.f32")) if base.is_dir() else sorted(d.rglob("*.f32"))
    return files


def run_filter(in_dir, params: FilterParams, seed: int, out_dir=None):
    """Filter an nDSM tree; writes ``keep_list.txt`` and ``filter_report.jsonl``, never deletes inputs."""
    out = Path(out_dir or in_dir)
    out.mkdir(parents=True, exist_ok=True)
    tiles = []
    skipped = []
    for f in find_ndsm_files(in_dir):
        if not rio.sidecar_path(f).exists():
            log.warning("skipping %s: missing sidecar", f)
            skipped.append({"tile_id": f.stem, "error": "missing sidecar"})
            continue
        tiles.append((f.stem, lambda f=f: rio.read_f32(f)[0]))
    kept, report = filter_dataset(tiles, params, seed)
    report.failures = skipped + report.failures
    (out / "keep_list.txt").write_text("".join(f"{t}\n" for t in kept))
    with open(out / FILTER_REPORT, "w") as fh:
        for r in report.records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    return kept, report


# ---------------------------------------------------------------- eval

def _height_files(d):
    d = Path(d)
    base = d / "post" / "ndsm"
    src = base if base.is_dir() else d
    return {f.stem: f for f in sorted(src.glob("*.f32"))}


def _label_files(d):
    d = Path(d)
    base = d / "post" / "label"
    src = base if base.is_dir() else d
    return {f.stem: f for f in sorted(src.glob("*.png"))}


def run_eval(pred_dir, gt_dir, task="height", report_path=None):
    """Evaluate paired tiles; unmatched ids are listed and evaluation runs on the intersection."""
    if task not in ("height", "seg"):
        raise ValueError(f"unknown task {task!r}")
    finder = _height_files if task == "height" else _label_files
    pred, gt = finder(pred_dir), finder(gt_dir)
    common = sorted(set(pred) & set(gt))
    unmatched = {"pred_only": sorted(set(pred) - set(gt)), "gt_only": sorted(set(gt) - set(pred))}
    warnings = len(unmatched["pred_only"]) + len(unmatched["gt_only"])
    per_tile = {}
    if task == "height":
        ev = HeightEvaluator()
        for t in common:
            per_tile[t] = ev.update(rio.read_f32(pred[t])[0], rio.read_f32(gt[t])[0])
        aggregate = ev.report().to_dict() if common else None
    else:
        conf = np.zeros((len(CLASS_NAMES), len(CLASS_NAMES)), dtype=np.int64)
        for t in common:
            r = seg_iou(rio.read_png(pred[t]), rio.read_png(gt[t]), len(CLASS_NAMES))
            conf += r.confusion
            per_tile[t] = r.to_dict(CLASS_NAMES)
        aggregate = seg_report_from_confusion(conf).to_dict(CLASS_NAMES) if common else None
        if aggregate is not None:
            aggregate["confusion"] = conf.tolist()
    report = {"task": task, "n_tiles": len(common), "aggregate": aggregate, "per_tile": per_tile,
              "unmatched": unmatched, "warnings": warnings}
    if report_path:
        _write_json(report_path, report)
    return report


# ---------------------------------------------------------------- stats

def run_stats(in_dir, out_dir=None):
    root = Path(in_dir)
    ndsm = _height_files(root)
    labels = _label_files(root)
    if not ndsm and not labels:
        raise EmptyDataset(f"no tiles under {root}")
    styles = {}
    if (root / MANIFEST).exists():
        for rec in json.loads((root / MANIFEST).read_text()).get("tiles", []):
            styles[rec["tile_id"]] = rec["style"]
    ids = sorted(set(ndsm) | set(labels))

    def style_of(t):
        if t in styles:
            return styles[t]
        if t in ndsm and rio.sidecar_path(ndsm[t]).exists():
            return json.loads(rio.sidecar_path(ndsm[t]).read_text()).get("style")
        return None

    items = [(t, style_of(t),
              (lambda t=t: rio.read_f32(ndsm[t])[0]) if t in ndsm else None,
              (lambda t=t: rio.read_png(labels[t])) if t in labels else None) for t in ids]
    stats = dataset_stats(items)
    out = Path(out_dir or root)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "stats.json", stats.to_dict(CLASS_NAMES))
    with open(out / "stats.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scope", "n_tiles", "height_mean", "height_std", *CLASS_NAMES])
        rows = [("all", stats)] + sorted(stats.per_style.items())
        for scope, s in rows:
            w.writerow([scope, s.n_tiles, f"{s.height_mean:.6f}", f"{s.height_std:.6f}",
                        *(f"{v:.6f}" for v in s.class_proportions)])
    return stats


# ---------------------------------------------------------------- adaptation preprocessing

def run_adapt_prep(src_dir, ref_dir, out_dir, mode="hm", blend_min=0.8, blend_max=1.0, seed=0):
    """Translate every source PNG toward a randomly drawn reference PNG; logs (mode, blend, ref)."""
    src_dir, ref_dir, out = Path(src_dir), Path(ref_dir), Path(out_dir)
    if not 0 <= blend_min <= blend_max <= 1:
        raise ValueError("need 0 <= blend_min <= blend_max <= 1")
    refs = sorted(ref_dir.rglob("*.png"))
    if not refs:
        raise EmptyDataset(f"no reference images under {ref_dir}")
    entries = []
    for f in sorted(src_dir.rglob("*.png")):
        rel = f.relative_to(src_dir)
        rng = SeededRng(seed).child("adapt-prep").child(str(rel)).generator()
        blend = float(rng.uniform(blend_min, blend_max))
        ref = refs[int(rng.integers(len(refs)))]
        img = rio.read_png(f)[..., :3]
        out_img = translate_image(img, rio.read_png(ref)[..., :3], mode=mode, blend=blend)
        dest = out / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        rio.write_rgb(dest, out_img)
        entries.append({"image": str(rel), "ref": str(ref.relative_to(ref_dir)), "mode": mode, "blend": blend})
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "translate_log.json", entries)
    return entries


def run_pseudo_refine(probs_dir, height_dir, out_dir, tau=0.95, eta=1.55, eps=0.01, height_aug_dir=None):
    """Build pseudo-label bundles from probability maps and original/augmented height maps.

    Augmented heights come from ``height_aug_dir/<id>.f32`` or, by default,
    ``height_dir/<id>_aug.f32``.
    """
    probs_dir, height_dir, out = Path(probs_dir), Path(height_dir), Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    done, failures = [], []
    for f in sorted(probs_dir.glob("*.f32")):
        t = f.stem
        h_path = height_dir / f"{t}.f32"
        aug_path = (Path(height_aug_dir) / f"{t}.f32") if height_aug_dir else height_dir / f"{t}_aug.f32"
        try:
            probs, _ = rio.read_f32(f)
            h_ori, _ = rio.read_f32(h_path)
            h_aug, _ = rio.read_f32(aug_path)
            b = make_pseudo_bundle(probs, h_ori, h_aug, tau=tau, eta=eta, eps=eps)
        except (OSError, ValueError) as exc:
            log.warning("tile %s failed: %s", t, exc)
            failures.append({"tile_id": t, "error": str(exc)})
            continue
        rio.write_label(out / f"{t}_label.png", b.labels)
        rio.write_mask(out / f"{t}_conf.png", b.confidence)
        rio.write_mask(out / f"{t}_consistency.png", b.consistency)
        rio.write_f32(out / f"{t}_height.f32", b.height)
        done.append(t)
    return done, failures


def run_damage(pre_dir, post_dir, threshold, out_dir):
    pre, post = _height_files(pre_dir), _height_files(post_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for t in sorted(set(pre) & set(post)):
        m = damage_map(rio.read_f32(pre[t])[0], rio.read_f32(post[t])[0], threshold)
        rio.write_mask(out / f"{t}.png", m)
        summary[t] = int(m.sum())
    _write_json(out / "damage_summary.json", {"threshold": threshold, "damaged_pixels": summary})
    return summary
