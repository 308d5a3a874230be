"""Feature-file format, labeled-dataset assembly, and train/test splitting.

The on-disk format is a UTF-8 CSV with header ``sample_id,label,f0,...,f{d-1}``
and a sidecar manifest ``<file>.manifest.json`` recording model_tag,
embed_dim, row count and a SHA-256 of the CSV bytes.  Floats are written with
17 significant digits so a write/read round trip reproduces every 64-bit
value exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateSampleId,
    MalformedHeader,
    NonFiniteValue,
    RaggedRow,
    TooFewSamples,
)
from .rng import generator


@dataclass
class FeatureMatrix:
    """n x d matrix of deep features with row sample ids and a source tag."""

    sample_ids: list[str]
    model_tag: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if len(self.sample_ids) != self.values.shape[0]:
            raise ValueError("sample_ids length must equal row count")
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise DuplicateSampleId("sample ids are not unique")
        if self.values.size and not np.all(np.isfinite(self.values)):
            raise NonFiniteValue("feature values must be finite")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def take(self, indices) -> "FeatureMatrix":
        idx = list(indices)
        return FeatureMatrix(
            sample_ids=[self.sample_ids[i] for i in idx],
            model_tag=self.model_tag,
            values=self.values[idx],
        )


@dataclass
class LabeledDataset:
    """Feature matrix plus integer class labels and the class-name table."""

    features: FeatureMatrix
    labels: np.ndarray
    class_names: list[str]

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (self.features.n,):
            raise ValueError("labels must be one integer per feature row")
        k = len(self.class_names)
        if self.labels.size:
            if self.labels.min() < 0 or self.labels.max() >= k:
                raise ValueError("labels must lie in [0, n_classes)")
            present = np.unique(self.labels)
            if len(present) != k:
                missing = sorted(set(range(k)) - set(present.tolist()))
                raise ValueError(f"classes with no samples: {missing}")

    @property
    def n(self) -> int:
        return self.features.n

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def take(self, indices) -> "LabeledDataset":
        idx = list(indices)
        return LabeledDataset(
            features=self.features.take(idx),
            labels=self.labels[idx],
            class_names=list(self.class_names),
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


@dataclass
class SplitSpec:
    train_fraction: float
    seed: int
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def _format_value(x: float) -> str:
    return format(float(x), ".17g")


def write_feature_csv(fm: FeatureMatrix, path, labels=None) -> None:
    """Write the CSV and its manifest; the label column is blank when
    ``labels`` is None."""
    path = Path(path)
    d = fm.dim
    header = "sample_id,label," + ",".join(f"f{j}" for j in range(d))
    lines = [header]
    if labels is None:
        label_strs = [""] * fm.n
    else:
        label_strs = [str(int(v)) for v in labels]
    for i in range(fm.n):
        row = fm.values[i]
        lines.append(
            fm.sample_ids[i]
            + ","
            + label_strs[i]
            + ","
            + ",".join(_format_value(v) for v in row)
        )
    data = ("\n".join(lines) + "\n").encode("utf-8")
    path.write_bytes(data)
    manifest = {
        "model_tag": fm.model_tag,
        "embed_dim": d,
        "n": fm.n,
        "sha256": hashlib.sha256(data).hexdigest(),
    }
    manifest_path = Path(str(path) + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _parse_feature_value(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise NonFiniteValue(f"unparseable value {text!r} at {where}") from exc
    if not math.isfinite(v):
        raise NonFiniteValue(f"non-finite value {text!r} at {where}")
    return v


def read_feature_csv(path, model_tag: str | None = None) -> FeatureMatrix:
    """Read a feature CSV.  model_tag falls back to the manifest, then the
    file stem.  Label column content is ignored here (see
    :func:`read_labeled_csv`)."""
    fm, _ = _read_csv(path, model_tag)
    return fm


def read_labeled_csv(path, class_names: list[str], model_tag: str | None = None) -> LabeledDataset:
    """Read a feature CSV whose label column is populated."""
    fm, labels = _read_csv(path, model_tag)
    if any(s is None for s in labels):
        raise MalformedHeader(f"{path}: label column has empty entries")
    return LabeledDataset(fm, np.array(labels, dtype=np.int64), class_names)


def _read_csv(path, model_tag):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines:
        raise MalformedHeader(f"{path}: empty file")
    header = lines[0].split(",")
    if len(header) < 2 or header[0] != "sample_id" or header[1] != "label":
        raise MalformedHeader(f"{path}: header must start with sample_id,label")
    d = len(header) - 2
    for j, name in enumerate(header[2:]):
        if name != f"f{j}":
            raise MalformedHeader(f"{path}: feature column {j} named {name!r}, expected f{j}")
    ids: list[str] = []
    labels: list[int | None] = []
    rows = np.empty((len(lines) - 1, d), dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != d + 2:
            raise RaggedRow(f"{path}: row {i} has {len(parts) - 2} values, expected {d}")
        ids.append(parts[0])
        labels.append(int(parts[1]) if parts[1] != "" else None)
        for j in range(d):
            rows[i, j] = _parse_feature_value(parts[2 + j], f"row {i}, f{j}")
    if len(set(ids)) != len(ids):
        raise DuplicateSampleId(f"{path}: duplicate sample ids")
    if model_tag is None:
        manifest_path = Path(str(path) + ".manifest.json")
        if manifest_path.exists():
            model_tag = json.loads(manifest_path.read_text())["model_tag"]
        else:
            model_tag = path.stem
    return FeatureMatrix(ids, model_tag, rows), labels


def write_labeled_csv(ds: LabeledDataset, path) -> None:
    write_feature_csv(ds.features, path, labels=ds.labels)


def stratified_split(ds: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Split per class: floor(train_fraction * n_c) rows to train, the rest to
    test.  Membership is drawn from the seeded stream; row order within each
    part keeps the original dataset order."""
    counts = ds.class_counts()
    if counts.min() < 2:
        raise TooFewSamples("every class needs at least 2 samples to split")
    n = ds.n
    train_mask = np.zeros(n, dtype=bool)
    if spec.stratified:
        for c in range(ds.n_classes):
            idx = np.flatnonzero(ds.labels == c)
            n_train = int(math.floor(spec.train_fraction * len(idx)))
            if n_train < 1 or n_train >= len(idx):
                raise TooFewSamples(
                    f"class {c}: {len(idx)} samples cannot be split at "
                    f"fraction {spec.train_fraction}"
                )
            rng = generator(spec.seed, "split", c)
            perm = rng.permutation(len(idx))
            train_mask[idx[perm[:n_train]]] = True
    else:
        rng = generator(spec.seed, "split", "all")
        perm = rng.permutation(n)
        n_train = int(math.floor(spec.train_fraction * n))
        train_mask[perm[:n_train]] = True
    train_idx = np.flatnonzero(train_mask)
    test_idx = np.flatnonzero(~train_mask)
    return ds.take(train_idx), ds.take(test_idx)
