"""Command-line entry point: composable pipeline stages driven by a JSON
config.

    fusepipe pipeline --config cfg.json
    fusepipe tune --config cfg.json --variant norm_pca --grid prose
    fusepipe report --config cfg.json --out runs/alt
    fusepipe make-synthetic --dir fixtures/synth

Stage outputs land under the config's out_dir and are reused on rerun when
their stamped inputs are unchanged; FUSEPIPE_THREADS caps worker processes.
"""

from __future__ import annotations

import argparse
import sys

from .errors import FusepipeError
from .pipeline import Pipeline, PipelineConfig, make_synthetic_suite

STAGES = ("preprocess", "split", "tune", "train", "fuse", "vote", "report", "pipeline")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusepipe",
        description="Deep-feature fusion and classifier-voting experiment pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument(
            "--grid", choices=("table4", "prose"), default=None, help="override the search space"
        )
        p.add_argument(
            "--variant",
            choices=("simple", "norm_pca", "smote", "norm_pca_smote"),
            default=None,
            help="restrict to one preprocessing variant",
        )
        p.add_argument("--workers", type=int, default=None, help="worker process cap")
    synth = sub.add_parser("make-synthetic", help="write the bundled synthetic fixture")
    synth.add_argument("--dir", required=True, help="directory for feature files and config")
    synth.add_argument("--n", type=int, default=400)
    synth.add_argument("--dim", type=int, default=16)
    synth.add_argument("--sets", type=int, default=3)
    synth.add_argument("--separation", type=float, default=4.0)
    synth.add_argument("--seed", type=int, default=20250811)
    return parser


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.from_json(args.config)
    if args.seed is not None:
        config.master_seed = args.seed
    if args.out is not None:
        config.out_dir = args.out
    if args.grid is not None:
        config.grids = args.grid
    if args.workers is not None:
        config.workers = args.workers
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .hpo import _pin_blas_threads

    _pin_blas_threads()  # tiny-matrix workloads; BLAS threading only hurts
    try:
        if args.command == "make-synthetic":
            path = make_synthetic_suite(
                args.dir, n=args.n, d=args.dim, n_sets=args.sets,
                separation=args.separation, seed=args.seed,
            )
            print(f"wrote synthetic fixture config: {path}")
            return 0
        config = _load_config(args)
        pipeline = Pipeline(config)
        variants = [args.variant] if args.variant else None
        if args.command == "preprocess":
            pipeline.stage_preprocess()
        elif args.command == "split":
            doc = pipeline.stage_split()
            print(f"split: {len(doc['train'])} train / {len(doc['test'])} test")
        elif args.command == "tune":
            pipeline.stage_split()
            pipeline.stage_tune(variants)
        elif args.command == "train":
            pipeline.stage_split()
            pipeline.stage_train(variants)
        elif args.command == "fuse":
            pipeline.stage_fuse(variants)
        elif args.command == "vote":
            pipeline.stage_vote(variants)
        elif args.command == "report":
            written = pipeline.stage_report(variants)
            for path in written:
                print(path)
        elif args.command == "pipeline":
            written = pipeline.run_all(variants)
            print(f"pipeline complete: {len(written)} tables under {pipeline.out / 'reports'}")
        return 0
    except FusepipeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
