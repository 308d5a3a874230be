"""vitfeat command line: list the supported checkpoints, export features.

    vitfeat list-models
    vitfeat extract --model vit_base_patch16_224 --images prep/ \
        --out features/vit_base_patch16_224.csv --checkpoint-dir ckpts/
"""

from __future__ import annotations

import argparse
import sys

from .extract import DimensionMismatch, MissingCheckpoint, extract
from .models import list_models


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vitfeat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list-models", help="print the supported checkpoints")
    ex = sub.add_parser("extract", help="export deep features for a directory of images")
    ex.add_argument("--model", required=True)
    ex.add_argument("--images", required=True, help="image dir (flat, or one subdir per class)")
    ex.add_argument("--out", required=True, help="output feature CSV path")
    ex.add_argument("--checkpoint-dir", required=True)
    ex.add_argument("--batch-size", type=int, default=16)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-models":
        for m in list_models():
            print(f"{m.name:28s} input {m.input_size}  dim {m.embed_dim}")
        return 0
    try:
        manifest = extract(
            args.images, args.model, args.out, args.checkpoint_dir, batch_size=args.batch_size
        )
    except (MissingCheckpoint, DimensionMismatch, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {manifest['n']} x {manifest['embed_dim']} features ({manifest['model_tag']})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
