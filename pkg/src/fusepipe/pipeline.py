"""Pipeline stages: preprocess, split, tune, train, fuse, vote, report.

Every stage is a deterministic function of its on-disk inputs plus the
config, writes its artifacts under the output directory, and is skipped when
a stamp shows the artifact already matches its inputs (delete an artifact
and the stage reproduces it byte-identically).  Heavy tune work is cached by
a content key over (features, labels, grid, cv, derived seed), so variants
that happen to transform a set identically share one search.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classifiers as clf
from . import imgprep
from .ensemble import enumerate_fusions, fuse_features, majority_vote, rank_classifiers, rank_feature_sets
from .errors import ConfigInvalid, MissingArtifact
from .evalreport import RunReport, accuracy, make_table
from .featureio import (
    FeatureMatrix,
    LabeledDataset,
    SplitSpec,
    read_labeled_csv,
    stratified_split,
    write_feature_csv,
    write_labeled_csv,
)
from .hpo import CvConfig, HyperGrid, builtin_grids, grid_search, ledger_to_csv, load_grid_file
from .rng import derive_seed, generator
from .transforms import VARIANTS, FittedVariant, fit_variant

CONFIG_VERSION = 1

_CONFIG_KEYS = {
    "version",
    "dataset_tag",
    "feature_files",
    "class_names",
    "train_fraction",
    "stratified",
    "variants",
    "grids",
    "cv_folds",
    "fusion_sizes",
    "vote_sizes",
    "top_feature_sets",
    "pca_target",
    "smote_k",
    "master_seed",
    "out_dir",
    "workers",
    "preprocess",
}

_PREPROCESS_KEYS = {
    "image_dir",
    "out_dir",
    "target_size",
    "threshold",
    "blur_radius",
    "morph_iters",
    "augment",
}


@dataclass
class PipelineConfig:
    dataset_tag: str
    feature_files: dict  # tag -> labeled csv path
    class_names: list[str]
    out_dir: str
    master_seed: int = 0
    train_fraction: float = 0.8
    stratified: bool = True
    variants: list[str] = field(default_factory=lambda: list(VARIANTS))
    grids: str = "table4"  # table4 | prose | path to a grids json
    cv_folds: int = 5
    fusion_sizes: list[int] = field(default_factory=lambda: [2, 3])
    vote_sizes: list[int] = field(default_factory=lambda: [2, 3])
    top_feature_sets: int = 5
    pca_target: float = 0.95
    smote_k: int = 5
    workers: int | None = None
    preprocess: dict | None = None

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        doc = json.loads(Path(path).read_text())
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        if doc.get("version") != CONFIG_VERSION:
            raise ConfigInvalid(f"config version must be {CONFIG_VERSION}")
        if doc.get("preprocess"):
            bad = set(doc["preprocess"]) - _PREPROCESS_KEYS
            if bad:
                raise ConfigInvalid(f"unknown preprocess keys: {sorted(bad)}")
        required = {"dataset_tag", "feature_files", "class_names", "out_dir", "master_seed"}
        missing = required - set(doc)
        if missing:
            raise ConfigInvalid(f"missing config keys: {sorted(missing)}")
        kwargs = {k: v for k, v in doc.items() if k != "version"}
        config = cls(**kwargs)
        for v in config.variants:
            if v not in VARIANTS:
                raise ConfigInvalid(f"unknown variant {v!r}")
        base = Path(path).parent
        config.feature_files = {
            tag: str((base / p)) if not Path(p).is_absolute() else p
            for tag, p in sorted(config.feature_files.items())
        }
        if not Path(config.out_dir).is_absolute():
            config.out_dir = str(base / config.out_dir)
        if config.grids not in ("table4", "prose") and not Path(config.grids).is_absolute():
            config.grids = str(base / config.grids)
        for tag, p in config.feature_files.items():
            if not Path(p).exists():
                raise ConfigInvalid(f"feature file for {tag!r} not found: {p}")
        return config

    def canonical(self) -> str:
        doc = {
            "version": CONFIG_VERSION,
            "dataset_tag": self.dataset_tag,
            "feature_files": {t: Path(p).name for t, p in sorted(self.feature_files.items())},
            "class_names": self.class_names,
            "train_fraction": self.train_fraction,
            "stratified": self.stratified,
            "variants": self.variants,
            "grids": self.grids if self.grids in ("table4", "prose") else Path(self.grids).name,
            "cv_folds": self.cv_folds,
            "fusion_sizes": self.fusion_sizes,
            "vote_sizes": self.vote_sizes,
            "top_feature_sets": self.top_feature_sets,
            "pca_target": self.pca_target,
            "smote_k": self.smote_k,
            "master_seed": self.master_seed,
        }
        return json.dumps(doc, sort_keys=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _sha(text_or_bytes) -> str:
    data = text_or_bytes if isinstance(text_or_bytes, bytes) else text_or_bytes.encode()
    return hashlib.sha256(data).hexdigest()


def _write_stamped(path: Path, content: str, stamp: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)
    Path(str(path) + ".stamp").write_text(stamp + "\n")


def _stamp_fresh(path: Path, stamp: str) -> bool:
    sp = Path(str(path) + ".stamp")
    return path.exists() and sp.exists() and sp.read_text().strip() == stamp


def base_id(sample_id: str) -> str:
    """Augmented variants carry a ``__rotXXX[_hflip]`` suffix; the base id
    groups them so a source image never straddles the split."""
    return sample_id.split("__rot")[0]


def is_original_variant(sample_id: str) -> bool:
    return "__rot" not in sample_id or sample_id.endswith("__rot000")


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.out_dir)
        self.kinds = list(clf.KINDS)

    # --- shared helpers -------------------------------------------------------

    def _grids(self) -> dict[str, HyperGrid]:
        g = self.config.grids
        return builtin_grids(g) if g in ("table4", "prose") else load_grid_file(g)

    def _load_set(self, tag: str) -> LabeledDataset:
        path = self.config.feature_files[tag]
        return read_labeled_csv(path, list(self.config.class_names), model_tag=tag)

    def _fused_path(self, label: str) -> Path:
        return self.out / "features" / "fused" / f"{label}.csv"

    def _run_dir(self, variant: str, set_tag: str, kind: str | None = None) -> Path:
        d = self.out / "runs" / variant / set_tag
        return d / kind if kind else d

    def set_tags(self) -> list[str]:
        return sorted(self.config.feature_files.keys())

    # --- preprocess -----------------------------------------------------------

    def stage_preprocess(self) -> None:
        """Crop to the largest component's extremes, resize, and augment the
        source images (no-op unless the config names an image directory)."""
        pp = self.config.preprocess
        if not pp:
            return
        src = Path(pp["image_dir"])
        dst = Path(pp["out_dir"])
        target = int(pp.get("target_size", 224))
        threshold = int(pp.get("threshold", 45))
        blur_radius = int(pp.get("blur_radius", 2))
        morph_iters = int(pp.get("morph_iters", 2))
        do_augment = bool(pp.get("augment", True))
        policy = imgprep.AugmentPolicy() if do_augment else imgprep.AugmentPolicy((0,), False)
        for class_dir in sorted(p for p in src.iterdir() if p.is_dir()):
            out_dir = dst / class_dir.name
            out_dir.mkdir(parents=True, exist_ok=True)
            for img_path in sorted(class_dir.glob("*.png")):
                img = imgprep.read_png(img_path)
                mask = imgprep.binarize_and_clean(img, threshold, blur_radius, morph_iters)
                if mask.bits.any():
                    ep = imgprep.find_extreme_points(mask)
                    img = imgprep.crop_to_extremes(img, ep)
                resized = imgprep.resize_bicubic(img, target, target)
                variants = imgprep.augment([resized], policy)
                for label, variant_img in zip(policy.labels(), variants):
                    imgprep.write_png(variant_img, out_dir / f"{img_path.stem}__{label}.png")

    # --- split ----------------------------------------------------------------

    def stage_split(self) -> dict:
        """Stratified split over base sample ids, shared by every feature
        set.  Augmented variants follow their base id; the test side keeps
        only original (unrotated, unflipped) variants."""
        first = self._load_set(self.set_tags()[0])
        ids = first.features.sample_ids
        labels = first.labels
        bases: dict[str, int] = {}
        for sid, lab in zip(ids, labels):
            b = base_id(sid)
            if b in bases and bases[b] != int(lab):
                raise ConfigInvalid(f"conflicting labels for base id {b!r}")
            bases[b] = int(lab)
        base_list = sorted(bases)
        base_labels = np.array([bases[b] for b in base_list])
        base_fm = FeatureMatrix(base_list, "bases", np.zeros((len(base_list), 1)))
        base_ds = LabeledDataset(base_fm, base_labels, list(self.config.class_names))
        spec = SplitSpec(
            self.config.train_fraction,
            seed=derive_seed(self.config.master_seed, "split"),
            stratified=self.config.stratified,
        )
        train_ds, test_ds = stratified_split(base_ds, spec)
        train_bases = set(train_ds.features.sample_ids)
        doc = {
            "train": [s for s in ids if base_id(s) in train_bases],
            "test": [
                s for s in ids if base_id(s) not in train_bases and is_original_variant(s)
            ],
            "classes": list(self.config.class_names),
        }
        content = json.dumps(doc, sort_keys=True)
        stamp = _sha(content + self.config.config_hash())
        path = self.out / "split.json"
        if not _stamp_fresh(path, stamp):
            _write_stamped(path, content, stamp)
        return doc

    def _split_doc(self) -> dict:
        path = self.out / "split.json"
        if not path.exists():
            raise MissingArtifact("split.json not found; run the split stage", stage="split")
        return json.loads(path.read_text())

    def _split_set(self, tag: str) -> tuple[LabeledDataset, LabeledDataset]:
        ds = self._load_set(tag)
        doc = self._split_doc()
        index = {sid: i for i, sid in enumerate(ds.features.sample_ids)}
        train_idx = [index[s] for s in doc["train"]]
        test_idx = [index[s] for s in doc["test"]]
        return ds.take(train_idx), ds.take(test_idx)

    # --- variant transforms -----------------------------------------------------

    def _variant_for(self, variant: str, set_tag: str, train: LabeledDataset) -> FittedVariant:
        path = self._run_dir(variant, set_tag) / "variant.json"
        stamp = _sha(
            repr((variant, set_tag, self.config.pca_target, self.config.smote_k))
            + _sha(train.features.values.tobytes())
            + str(derive_seed(self.config.master_seed, "smote", set_tag))
        )
        if _stamp_fresh(path, stamp):
            return FittedVariant.load(path)
        fitted = fit_variant(
            train,
            variant,
            pca_target=self.config.pca_target,
            smote_k=self.config.smote_k,
            seed=derive_seed(self.config.master_seed, "smote", set_tag),
        )
        _write_stamped(path, json.dumps(fitted.to_dict(), sort_keys=True), stamp)
        return fitted

    # --- tune + train -----------------------------------------------------------

    def _tune_one(self, variant: str, set_tag: str, kind: str, train: LabeledDataset,
                  test_fm: FeatureMatrix, test_labels: np.ndarray) -> dict:
        """Grid-search one (variant, set, classifier); returns the metrics
        dict.  Work is cached under a content key so identical inputs are
        never searched twice."""
        grids = self._grids()
        grid = grids[kind]
        cv_seed = derive_seed(self.config.master_seed, "cv", set_tag)
        cv = CvConfig(folds=self.config.cv_folds, stratified=True, seed=cv_seed)
        key = _sha(
            b"tune"
            + train.features.values.tobytes()
            + train.labels.tobytes()
            + json.dumps(grid.axes, sort_keys=True).encode()
            + repr((kind, cv.folds, cv.seed)).encode()
        )[:24]
        run_dir = self._run_dir(variant, set_tag, kind)
        cache_dir = self.out / "cache" / "tune" / key
        artifacts = ("ledger.csv", "best.json", "model.json")

        if not all((cache_dir / a).exists() for a in artifacts):
            result = grid_search(grid, train, cv, workers=self.config.workers)
            cache_dir.mkdir(parents=True, exist_ok=True)
            (cache_dir / "ledger.csv").write_text(ledger_to_csv(result))
            best = {
                "kind": kind,
                "params": clf._jsonable_params(result.best_spec.params),
                "seed": result.best_spec.seed,
                "cv_score": result.best_score,
                "cv_folds": cv.folds,
                "cv_seed": cv.seed,
            }
            (cache_dir / "best.json").write_text(json.dumps(best, sort_keys=True) + "\n")
            clf.save_model(result.best_model, cache_dir / "model.json")
            (cache_dir / "timings.json").write_text(
                json.dumps({"wall_times": result.wall_times}) + "\n"
            )
        run_dir.mkdir(parents=True, exist_ok=True)
        for a in artifacts:
            target = run_dir / a
            if not target.exists() or target.read_bytes() != (cache_dir / a).read_bytes():
                shutil.copyfile(cache_dir / a, target)

        model = clf.load_model(run_dir / "model.json")
        pred = clf.predict(model, test_fm)
        acc = accuracy(test_labels, pred)
        metrics = {"accuracy": acc, "n_test": int(len(test_labels)), "tune_key": key}
        (run_dir / "metrics.json").write_text(json.dumps(metrics, sort_keys=True) + "\n")
        lines = ["sample_id,prediction"] + [
            f"{sid},{int(p)}" for sid, p in zip(test_fm.sample_ids, pred)
        ]
        (run_dir / "predictions.csv").write_text("\n".join(lines) + "\n")
        return metrics

    def _evaluate_sets(self, variant: str, tags: list[str], loader) -> dict:
        """tune+train+eval every (set, kind) cell for one variant; loader
        maps a tag to its full LabeledDataset."""
        cells = {}
        for tag in tags:
            ds = loader(tag)
            train, test = self._split_ds(ds)
            fitted = self._variant_for(variant, tag, train)
            train_t = fitted.apply_train(train)
            test_fm = fitted.apply_test(test.features)
            for kind in self.kinds:
                metrics = self._tune_one(variant, tag, kind, train_t, test_fm, test.labels)
                cells[(tag, kind)] = metrics["accuracy"]
        return cells

    def _split_ds(self, ds: LabeledDataset) -> tuple[LabeledDataset, LabeledDataset]:
        doc = self._split_doc()
        index = {sid: i for i, sid in enumerate(ds.features.sample_ids)}
        train_idx = [index[s] for s in doc["train"]]
        test_idx = [index[s] for s in doc["test"]]
        return ds.take(train_idx), ds.take(test_idx)

    def stage_tune(self, variants: list[str] | None = None) -> None:
        """Experiment 1: per (feature set x classifier) search, refit, and
        test evaluation, per preprocessing variant."""
        for variant in variants or self.config.variants:
            self._evaluate_sets(variant, self.set_tags(), self._load_set)

    stage_train = stage_tune  # refit+eval happen with the search; rerun = resume

    # --- fuse ---------------------------------------------------------------

    def base_variant(self) -> str:
        return "simple" if "simple" in self.config.variants else self.config.variants[0]

    def _single_report(self, variant: str) -> RunReport:
        cells = {}
        for tag in self.set_tags():
            for kind in self.kinds:
                path = self._run_dir(variant, tag, kind) / "metrics.json"
                if not path.exists():
                    raise MissingArtifact(
                        f"metrics for {variant}/{tag}/{kind} missing; run tune", stage="tune"
                    )
                cells[(tag, kind)] = json.loads(path.read_text())["accuracy"]
        return RunReport(
            dataset_tag=self.config.dataset_tag,
            variant=variant,
            table_kind="single",
            row_labels=self.set_tags(),
            col_labels=self.kinds,
            cells=cells,
            master_seed=self.config.master_seed,
            config_hash=self.config.config_hash(),
        )

    def fusion_labels(self) -> list[str]:
        """Fusion sets fixed by the base variant's single-model ranking."""
        ranking = rank_feature_sets(self._single_report(self.base_variant()))
        top3 = ranking.top(3)
        fusions = enumerate_fusions(top3)
        wanted = [f for f in fusions if len(f.tags) in self.config.fusion_sizes]
        return [f.label for f in wanted], wanted

    def stage_fuse(self, variants: list[str] | None = None) -> None:
        """Experiment 2: concatenate the top-3 single sets pairwise and as a
        triple, then tune/evaluate the fused sets like any other."""
        if len(self.set_tags()) < 3:
            return  # fusion needs three ranked sets
        labels, fusions = self.fusion_labels()
        singles = {tag: self._load_set(tag) for tag in self.set_tags()}
        fused_sets: dict[str, LabeledDataset] = {}
        for fusion in fusions:
            fm = fuse_features([singles[t].features for t in fusion.tags])
            first = singles[fusion.tags[0]]
            fused = LabeledDataset(fm, first.labels, list(self.config.class_names))
            path = self._fused_path(fusion.label)
            stamp = _sha(fm.values.tobytes())
            if not _stamp_fresh(path, stamp):
                path.parent.mkdir(parents=True, exist_ok=True)
                write_labeled_csv(fused, path)
                Path(str(path) + ".stamp").write_text(stamp + "\n")
            fused_sets[fusion.label] = fused
        for variant in variants or self.config.variants:
            self._evaluate_sets(variant, list(fused_sets), lambda t: fused_sets[t])

    def _fusion_report(self, variant: str) -> RunReport:
        labels, _ = self.fusion_labels()
        cells = {}
        for label in labels:
            for kind in self.kinds:
                path = self._run_dir(variant, label, kind) / "metrics.json"
                if not path.exists():
                    raise MissingArtifact(
                        f"metrics for {variant}/{label}/{kind} missing; run fuse", stage="fuse"
                    )
                cells[(label, kind)] = json.loads(path.read_text())["accuracy"]
        return RunReport(
            dataset_tag=self.config.dataset_tag,
            variant=variant,
            table_kind="fusion",
            row_labels=labels,
            col_labels=self.kinds,
            cells=cells,
            master_seed=self.config.master_seed,
            config_hash=self.config.config_hash(),
        )

    # --- vote ---------------------------------------------------------------

    def vote_structure(self) -> tuple[list[str], list[list[str]]]:
        """Columns (top feature sets) and member combos, both fixed by the
        base variant's report: pairs of the top-3 classifiers in rank order,
        then the triple, filtered by the configured vote sizes."""
        base = self._single_report(self.base_variant())
        ranking = rank_feature_sets(base)
        n_cols = min(self.config.top_feature_sets, len(base.row_labels))
        columns = ranking.top(n_cols)
        top3 = rank_classifiers(base, min(3, len(self.kinds)))
        combos: list[list[str]] = []
        if 2 in self.config.vote_sizes and len(top3) >= 2:
            combos += [[top3[0], top3[1]], [top3[0], top3[2]], [top3[1], top3[2]]]
        if 3 in self.config.vote_sizes and len(top3) >= 3:
            combos.append(list(top3))
        return columns, combos

    def stage_vote(self, variants: list[str] | None = None) -> None:
        """Experiment 3: majority voting of the top classifiers over the top
        feature sets, per variant, reusing the trained single-set models."""
        columns, combos = self.vote_structure()
        base = self._single_report(self.base_variant())
        member_rank = {m: i + 1 for i, m in enumerate(rank_classifiers(base, len(self.kinds)))}
        doc = self._split_doc()
        for variant in variants or self.config.variants:
            cells = {}
            for tag in columns:
                preds = {}
                for kind in set(m for combo in combos for m in combo):
                    run = self._run_dir(variant, tag, kind)
                    pred_path = run / "predictions.csv"
                    if not pred_path.exists():
                        raise MissingArtifact(
                            f"predictions for {variant}/{tag}/{kind} missing; run tune",
                            stage="tune",
                        )
                    rows = pred_path.read_text().strip().split("\n")[1:]
                    preds[kind] = np.array([int(r.split(",")[1]) for r in rows])
                test_labels = self._test_labels(tag)
                for combo in combos:
                    voted = majority_vote(
                        [preds[m] for m in combo], [member_rank[m] for m in combo]
                    )
                    cells[("+".join(combo), tag)] = accuracy(test_labels, voted)
            report = RunReport(
                dataset_tag=self.config.dataset_tag,
                variant=variant,
                table_kind="vote",
                row_labels=["+".join(c) for c in combos],
                col_labels=columns,
                cells=cells,
                master_seed=self.config.master_seed,
                config_hash=self.config.config_hash(),
            )
            path = self.out / "runs" / variant / "vote.json"
            _write_stamped(path, report.to_json(), _sha(report.to_json()))

    def _test_labels(self, tag: str) -> np.ndarray:
        _, test = self._split_set(tag) if tag in self.config.feature_files else self._split_ds(
            self._fused_dataset(tag)
        )
        return test.labels

    def _fused_dataset(self, label: str) -> LabeledDataset:
        path = self._fused_path(label)
        if not path.exists():
            raise MissingArtifact(f"fused features {label} missing; run fuse", stage="fuse")
        return read_labeled_csv(path, list(self.config.class_names), model_tag=label)

    # --- report ---------------------------------------------------------------

    def stage_report(self, variants: list[str] | None = None) -> list[Path]:
        """Render every table (single, fusion, vote per variant) as markdown,
        CSV and canonical JSON, plus the run manifest."""
        reports_dir = self.out / "reports"
        reports_dir.mkdir(parents=True, exist_ok=True)
        written = []
        use_variants = variants or self.config.variants
        have_fusion = len(self.set_tags()) >= 3
        for variant in use_variants:
            single = self._single_report(variant)
            ranking = rank_feature_sets(single)
            single.starred_rows = ranking.top(min(3, len(single.row_labels)))
            tables = [("single", single)]
            if have_fusion:
                tables.append(("fusion", self._fusion_report(variant)))
            vote_path = self.out / "runs" / variant / "vote.json"
            if not vote_path.exists():
                raise MissingArtifact(f"vote table for {variant} missing; run vote", stage="vote")
            tables.append(("vote", RunReport.from_json(vote_path.read_text())))
            for kind_name, report in tables:
                stem = f"{variant}_{kind_name}"
                (reports_dir / f"{stem}.md").write_text(make_table(report, "markdown"))
                (reports_dir / f"{stem}.csv").write_text(make_table(report, "csv"))
                (reports_dir / f"{stem}.json").write_text(report.to_json() + "\n")
                written += [reports_dir / f"{stem}.md", reports_dir / f"{stem}.csv"]
        manifest = {
            "config": json.loads(self.config.canonical()),
            "config_hash": self.config.config_hash(),
            "master_seed": self.config.master_seed,
            "feature_file_hashes": {
                tag: _sha(Path(p).read_bytes()) for tag, p in sorted(self.config.feature_files.items())
            },
            "tables": sorted(p.name for p in reports_dir.glob("*.md")),
        }
        (reports_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        return written

    # --- everything -------------------------------------------------------------

    def run_all(self, variants: list[str] | None = None) -> list[Path]:
        self.stage_preprocess()
        self.stage_split()
        self.stage_tune(variants)
        self.stage_fuse(variants)
        self.stage_vote(variants)
        return self.stage_report(variants)


# --- synthetic fixture ----------------------------------------------------------


def make_synthetic_suite(
    out_dir,
    n: int = 400,
    d: int = 16,
    n_sets: int = 3,
    separation: float = 4.0,
    seed: int = 62,
    noise: float = 0.1,
) -> Path:
    """Synthetic 2-class Gaussian feature suite: one latent cloud whose class
    means sit `separation` apart (in units of the shared per-feature std),
    viewed through one seeded orthogonal rotation per pseudo extractor.

    The default seed realises a test split with exactly one sample inside
    the class overlap and a wide slack to the next-hardest one, so any
    boundary within ~0.5 sigma of optimal scores at most one test error.
    Returns the path of a ready-to-run pipeline config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = generator(seed, "latent")
    half = n // 2
    direction = np.ones(d) / np.sqrt(d)
    latent = rng.normal(size=(n, d))
    latent[half:] += separation * direction
    labels = np.array([0] * half + [1] * (n - half))
    ids = [f"img{i:04d}" for i in range(n)]

    files = {}
    for s in range(n_sets):
        tag = f"synth_view{s}"
        q, _ = np.linalg.qr(generator(seed, "rotation", s).normal(size=(d, d)))
        values = latent @ q.T + noise * generator(seed, "noise", s).normal(size=(n, d))
        ds = LabeledDataset(FeatureMatrix(ids, tag, values), labels, ["normal", "tumor"])
        path = out / f"{tag}.csv"
        write_labeled_csv(ds, path)
        files[tag] = path.name

    config = {
        "version": CONFIG_VERSION,
        "dataset_tag": "synthetic-2c",
        "feature_files": files,
        "class_names": ["normal", "tumor"],
        "train_fraction": 0.8,
        "stratified": True,
        "variants": list(VARIANTS),
        "grids": "table4",
        # 3 folds keep the full-grid run inside the desk-scale time budget;
        # the library default elsewhere stays 5
        "cv_folds": 3,
        "fusion_sizes": [2, 3],
        "vote_sizes": [2, 3],
        "top_feature_sets": 3,
        "master_seed": seed,
        "out_dir": "run",
    }
    config_path = out / "config.json"
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    return config_path
