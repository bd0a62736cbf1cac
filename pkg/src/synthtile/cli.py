"""Command line entry point: ``synthtile <verb> ...``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .config import JobConfig, load_config
from .exceptions import ConfigError, EmptyDataset
from .filter import FilterParams

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="synthtile", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="generate a seeded tile dataset")
    g.add_argument("--config", help="TOML job config (defaults used if omitted)")
    g.add_argument("--count", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--workers", type=int)

    f = sub.add_parser("filter", help="height-coverage filter over an nDSM tree")
    f.add_argument("--in", dest="in_dir", required=True)
    f.add_argument("--ht", type=float, default=3.0, help="height threshold (m)")
    f.add_argument("--hm", type=float, default=0.05, help="minimum coverage")
    f.add_argument("--hs", type=float, default=40.0, help="sigmoid steepness")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", help="where to write keep_list.txt (default: --in)")

    s = sub.add_parser("stats", help="dataset height and class statistics")
    s.add_argument("--in", dest="in_dir", required=True)
    s.add_argument("--out")

    e = sub.add_parser("eval", help="evaluate predictions against ground truth")
    e.add_argument("--pred", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--task", choices=("height", "seg"), default="height")
    e.add_argument("--report", required=True)

    a = sub.add_parser("adapt", help="adaptation preprocessing")
    asub = a.add_subparsers(dest="action", required=True)
    ap = asub.add_parser("prep", help="translate source images toward a reference set")
    ap.add_argument("--src", required=True)
    ap.add_argument("--ref", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--mode", choices=("hm", "pda"), default="hm")
    ap.add_argument("--blend-min", type=float, default=0.8)
    ap.add_argument("--blend-max", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)

    ps = sub.add_parser("pseudo", help="pseudo-label tools")
    psub = ps.add_subparsers(dest="action", required=True)
    pr = psub.add_parser("refine", help="build pseudo-label bundles")
    pr.add_argument("--probs", required=True)
    pr.add_argument("--height", required=True)
    pr.add_argument("--height-aug", help="augmented-view heights (default: <height>/<id>_aug.f32)")
    pr.add_argument("--out", required=True)
    pr.add_argument("--tau", type=float, default=0.95)
    pr.add_argument("--eta", type=float, default=1.55)

    d = sub.add_parser("damage", help="building damage masks from pre/post height maps")
    d.add_argument("--pre", required=True)
    d.add_argument("--post", required=True)
    d.add_argument("--threshold", type=float, required=True)
    d.add_argument("--out", required=True)
    return p


def _generate(args):
    from .pipeline import run_generate

    try:
        cfg = load_config(args.config) if args.config else JobConfig()
        over = {k: v for k, v in (("count", args.count), ("seed", args.seed), ("out", args.out),
                                  ("workers", args.workers)) if v is not None}
        cfg = dataclasses.replace(cfg, **over)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest, code = run_generate(cfg)
    print(f"kept {len(manifest['tiles'])}, rejected {len(manifest['rejected'])}, "
          f"failed {len(manifest['failures'])}")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from . import pipeline

    if args.verb == "generate":
        return _generate(args)
    try:
        if args.verb == "filter":
            try:
                params = FilterParams(args.ht, args.hm, args.hs)
            except ValueError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            kept, report = pipeline.run_filter(args.in_dir, params, args.seed, args.out)
            print(f"kept {len(kept)} of {len(report.records)}")
            return EXIT_PARTIAL if report.failures else EXIT_OK
        if args.verb == "stats":
            st = pipeline.run_stats(args.in_dir, args.out)
            print(f"{st.n_tiles} tiles, height mean {st.height_mean:.3f} std {st.height_std:.3f}")
            return EXIT_PARTIAL if st.failures else EXIT_OK
        if args.verb == "eval":
            rep = pipeline.run_eval(args.pred, args.gt, args.task, args.report)
            print(json.dumps(rep["aggregate"], indent=1))
            return EXIT_PARTIAL if rep["warnings"] else EXIT_OK
        if args.verb == "adapt":
            log = pipeline.run_adapt_prep(args.src, args.ref, args.out, args.mode, args.blend_min,
                                          args.blend_max, args.seed)
            print(f"translated {len(log)} images")
            return EXIT_OK
        if args.verb == "pseudo":
            done, failures = pipeline.run_pseudo_refine(args.probs, args.height, args.out, args.tau,
                                                        args.eta, height_aug_dir=args.height_aug)
            print(f"refined {len(done)} tiles, {len(failures)} failed")
            return EXIT_PARTIAL if failures else EXIT_OK
        if args.verb == "damage":
            summary = pipeline.run_damage(args.pre, args.post, args.threshold, args.out)
            print(f"{len(summary)} damage masks")
            return EXIT_OK
    except EmptyDataset as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
