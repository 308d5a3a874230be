"""Preprocessing-variant toolbox: z-score scaling, PCA, SMOTE oversampling.

All three are fitted on the training split only.  The :class:`FittedVariant`
wrapper is the sole public path through which the pipeline touches test data,
and it never exposes a way to fit on, or synthesize into, the test split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import RankDeficient, TooFewMinority
from .featureio import FeatureMatrix, LabeledDataset
from .rng import generator

_STD_FLOOR = 1e-12  # columns below this pass through centered only


@dataclass
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.array(d["mean"], float), np.array(d["std"], float))


def fit_scaler(train: FeatureMatrix) -> ScalerParams:
    if train.n < 2:
        raise ValueError("scaler needs at least 2 rows to fit")
    mean = train.values.mean(axis=0)
    std = train.values.std(axis=0)  # population std
    return ScalerParams(mean=mean, std=std)


def apply_scaler(fm: FeatureMatrix, params: ScalerParams) -> FeatureMatrix:
    denom = np.where(params.std < _STD_FLOOR, 1.0, params.std)
    out = (fm.values - params.mean) / denom
    return FeatureMatrix(fm.sample_ids, fm.model_tag, out)


@dataclass
class PCAModel:
    mean: np.ndarray
    components: np.ndarray  # k x d, orthonormal rows
    eigenvalues: np.ndarray  # k, descending
    variance_captured: float
    explained_variance_ratio: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "variance_captured": self.variance_captured,
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PCAModel":
        return cls(
            np.array(d["mean"], float),
            np.array(d["components"], float),
            np.array(d["eigenvalues"], float),
            float(d["variance_captured"]),
            np.array(d["explained_variance_ratio"], float),
        )


def fit_pca(train: FeatureMatrix, target) -> PCAModel:
    """Principal components of the population covariance.

    ``target`` is either an int (component count) or a float in (0, 1]
    (smallest k whose cumulative explained variance reaches the fraction).
    Sign convention: the largest-magnitude entry of each component is
    positive.
    """
    n, d = train.values.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 rows to fit")
    mean = train.values.mean(axis=0)
    centered = train.values - mean
    cov = centered.T @ centered / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]
    total = float(eigvals.sum())
    ratios = eigvals / total if total > 0 else np.zeros_like(eigvals)

    rank_tol = max(n, d) * np.finfo(np.float64).eps * (eigvals[0] if eigvals.size else 0.0)
    rank = int(np.sum(eigvals > rank_tol))

    if isinstance(target, bool) or not isinstance(target, (int, float)):
        raise ValueError("target must be an int (k) or a float (variance fraction)")
    if isinstance(target, float):
        if not 0 < target <= 1:
            raise ValueError("variance target must be in (0, 1]")
        cum = np.cumsum(ratios)
        k = int(np.searchsorted(cum, target - 1e-15) + 1)
        k = min(k, max(rank, 1))
    else:
        k = int(target)
        if k < 1:
            raise ValueError("component count must be >= 1")
        if k > rank:
            raise RankDeficient(f"requested {k} components but matrix rank is {rank}")

    comps = eigvecs[:, :k].T.copy()
    # fix sign so the largest-|entry| of each component is positive
    for i in range(k):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return PCAModel(
        mean=mean,
        components=comps,
        eigenvalues=eigvals[:k].copy(),
        variance_captured=float(ratios[:k].sum()),
        explained_variance_ratio=ratios[:k].copy(),
    )


def pca_transform(fm: FeatureMatrix, model: PCAModel) -> FeatureMatrix:
    out = (fm.values - model.mean) @ model.components.T
    return FeatureMatrix(fm.sample_ids, fm.model_tag, out)


@dataclass
class SmoteConfig:
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")


def smote(ds: LabeledDataset, cfg: SmoteConfig) -> LabeledDataset:
    """Oversample every minority class up to the majority count.

    Each synthetic row is x_i + u * (x_nn - x_i) with u ~ Uniform[0,1] and
    x_nn one of the k nearest same-class neighbours (Euclidean).  Original
    rows are kept unchanged; synthetic ids carry a ``syn:`` prefix.
    """
    counts = ds.class_counts()
    n_max = int(counts.max())
    if np.all(counts == n_max):
        return ds

    new_rows = [ds.features.values]
    new_ids = list(ds.features.sample_ids)
    new_labels = [ds.labels]
    for c in range(ds.n_classes):
        need = n_max - int(counts[c])
        if need == 0:
            continue
        idx = np.flatnonzero(ds.labels == c)
        if len(idx) < 2:
            raise TooFewMinority(f"class {c} has {len(idx)} samples; SMOTE needs >= 2")
        X = ds.features.values[idx]
        k_eff = min(cfg.k_neighbors, len(idx) - 1)
        # k nearest same-class neighbours of each minority row
        d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2)
        np.fill_diagonal(d2, np.inf)
        nn = np.argsort(d2, axis=1, kind="stable")[:, :k_eff]

        rng = generator(cfg.seed, "smote", c)
        rows = np.empty((need, X.shape[1]))
        for s in range(need):
            base = int(rng.integers(len(idx)))
            pick = int(rng.integers(k_eff))
            u = rng.random()
            rows[s] = X[base] + u * (X[nn[base, pick]] - X[base])
            new_ids.append(f"syn:{c}:{s}")
        new_rows.append(rows)
        new_labels.append(np.full(need, c, dtype=np.int64))

    fm = FeatureMatrix(new_ids, ds.features.model_tag, np.vstack(new_rows))
    return LabeledDataset(fm, np.concatenate(new_labels), list(ds.class_names))


VARIANTS = ("simple", "norm_pca", "smote", "norm_pca_smote")


@dataclass
class FittedVariant:
    """One of the four preprocessing arms, fitted on a training split.

    ``apply_train`` runs the full chain (including oversampling);
    ``apply_test`` applies only the fitted, leak-free pieces.
    """

    variant: str
    scaler: ScalerParams | None
    pca: PCAModel | None
    smote_cfg: SmoteConfig | None

    def _project(self, fm: FeatureMatrix) -> FeatureMatrix:
        if self.scaler is not None:
            fm = apply_scaler(fm, self.scaler)
        if self.pca is not None:
            fm = pca_transform(fm, self.pca)
        return fm

    def apply_train(self, ds: LabeledDataset) -> LabeledDataset:
        out = LabeledDataset(self._project(ds.features), ds.labels, list(ds.class_names))
        if self.smote_cfg is not None:
            out = smote(out, self.smote_cfg)
        return out

    def apply_test(self, fm: FeatureMatrix) -> FeatureMatrix:
        return self._project(fm)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "scaler": self.scaler.to_dict() if self.scaler else None,
            "pca": self.pca.to_dict() if self.pca else None,
            "smote": (
                {"k_neighbors": self.smote_cfg.k_neighbors, "seed": self.smote_cfg.seed}
                if self.smote_cfg
                else None
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FittedVariant":
        return cls(
            variant=d["variant"],
            scaler=ScalerParams.from_dict(d["scaler"]) if d["scaler"] else None,
            pca=PCAModel.from_dict(d["pca"]) if d["pca"] else None,
            smote_cfg=SmoteConfig(**d["smote"]) if d["smote"] else None,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "FittedVariant":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_variant(
    train: LabeledDataset,
    variant: str,
    pca_target=0.95,
    smote_k: int = 5,
    seed: int = 0,
) -> FittedVariant:
    """Fit one preprocessing variant on the training split only.

    Order when combined: normalize, then PCA, then SMOTE.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    scaler = pca = smote_cfg = None
    fm = train.features
    if variant in ("norm_pca", "norm_pca_smote"):
        scaler = fit_scaler(fm)
        fm = apply_scaler(fm, scaler)
        pca = fit_pca(fm, pca_target)
    if variant in ("smote", "norm_pca_smote"):
        smote_cfg = SmoteConfig(k_neighbors=smote_k, seed=seed)
    return FittedVariant(variant=variant, scaler=scaler, pca=pca, smote_cfg=smote_cfg)
