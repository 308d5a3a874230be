"""Batch feature export into the shared feature-file format.

Output CSV: header ``sample_id,label,f0,...,f{d-1}``, UTF-8, '.' decimals,
floats at 17 significant digits; sidecar ``<file>.manifest.json`` with
model_tag, embed_dim, n, sha256 (of the CSV bytes) plus the normalization
recipe and checkpoint hash used.  This is the contract the downstream
pipeline reads; nothing else is shared with it.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .models import ExtractorModel, get_model
from .vit import VisionTransformer

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


class MissingCheckpoint(RuntimeError):
    pass


class DimensionMismatch(ValueError):
    pass


def checkpoint_path(checkpoint_dir, model: ExtractorModel) -> Path:
    return Path(checkpoint_dir) / f"{model.name}.pth"


def load_model(model: ExtractorModel, checkpoint_dir) -> VisionTransformer:
    path = checkpoint_path(checkpoint_dir, model)
    if not path.exists():
        raise MissingCheckpoint(
            f"no checkpoint for {model.name} at {path}; place a timm-format "
            f"state dict there (frozen pre-trained weights are an input, not "
            f"part of this package)"
        )
    net = VisionTransformer(model)
    state = torch.load(path, map_location="cpu", weights_only=True)
    if isinstance(state, dict) and "state_dict" in state:
        state = state["state_dict"]
    net.load_timm_state_dict(state)
    return net


def _iter_images(image_dir: Path):
    """(sample_id, label_name, path) in lexicographic sample-id order.

    A flat directory yields unlabeled rows; a directory of class
    subdirectories yields labels from the subdirectory names.
    """
    image_dir = Path(image_dir)
    entries = []
    subdirs = sorted(p for p in image_dir.iterdir() if p.is_dir())
    if subdirs:
        for sub in subdirs:
            for p in sub.iterdir():
                if p.suffix.lower() in IMAGE_SUFFIXES:
                    entries.append((f"{sub.name}/{p.stem}", sub.name, p))
    else:
        for p in image_dir.iterdir():
            if p.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((p.stem, None, p))
    entries.sort(key=lambda e: e[0])
    return entries


def _load_batch(paths: list[Path], model: ExtractorModel) -> torch.Tensor:
    mean = torch.tensor(model.mean).view(3, 1, 1)
    std = torch.tensor(model.std).view(3, 1, 1)
    tensors = []
    for p in paths:
        with Image.open(p) as im:
            im = im.convert("RGB")
            if im.size != (model.input_size, model.input_size):
                raise DimensionMismatch(
                    f"{p} is {im.size[0]}x{im.size[1]}, model expects "
                    f"{model.input_size}x{model.input_size}"
                )
            arr = np.asarray(im, dtype=np.float32) / 255.0
        t = torch.from_numpy(arr).permute(2, 0, 1)
        tensors.append((t - mean) / std)
    return torch.stack(tensors)


def _format_value(x: float) -> str:
    return format(float(x), ".17g")


def extract(
    image_dir,
    model_name: str,
    out_path,
    checkpoint_dir,
    batch_size: int = 16,
) -> dict:
    """Export one feature row per image; returns the manifest dict."""
    model = get_model(model_name)
    entries = _iter_images(image_dir)
    if not entries:
        raise FileNotFoundError(f"no images under {image_dir}")
    net = load_model(model, checkpoint_dir)

    class_names = sorted({label for _, label, _ in entries if label is not None})
    label_index = {name: i for i, name in enumerate(class_names)}

    rows = []
    for start in range(0, len(entries), batch_size):
        chunk = entries[start : start + batch_size]
        batch = _load_batch([p for _, _, p in chunk], model)
        feats = net.features(batch).numpy().astype(np.float64)
        rows.append(feats)
    values = np.vstack(rows)
    assert values.shape == (len(entries), model.embed_dim)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    header = "sample_id,label," + ",".join(f"f{j}" for j in range(model.embed_dim))
    lines = [header]
    for (sample_id, label, _), row in zip(entries, values):
        label_str = "" if label is None else str(label_index[label])
        lines.append(sample_id + "," + label_str + "," + ",".join(_format_value(v) for v in row))
    data = ("\n".join(lines) + "\n").encode("utf-8")
    out_path.write_bytes(data)

    ckpt = checkpoint_path(checkpoint_dir, model)
    manifest = {
        "model_tag": model.name,
        "embed_dim": model.embed_dim,
        "n": len(entries),
        "sha256": hashlib.sha256(data).hexdigest(),
        "input_size": model.input_size,
        "normalization": {"mean": list(model.mean), "std": list(model.std)},
        "checkpoint_sha256": hashlib.sha256(ckpt.read_bytes()).hexdigest(),
        "class_names": class_names,
    }
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )
    return manifest
