"""Grid-search hyperparameter optimization with stratified cross-validation.

Every configuration in the cartesian product is scored by k-fold CV accuracy
on the training split; the winner (highest mean, ties to lower fold std,
then earliest enumeration order) is refit on the full split.

Seed policy: the stream for a (config, fold) fit derives from
``(cv.seed, "cv", kind, fold, seed_family_key(spec))`` where the family key
holds the parameters that shape the random stream (for staged ensembles it
excludes the stage count, so a 500-tree run shares its first 100 trees with
a 100-tree run).  Keying seeds by content, not enumeration order, is what
lets parallel and serial searches produce identical ledgers, and lets the
evaluator share work between configs that provably fit the same model.
"""

from __future__ import annotations

import atexit
import hashlib
import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .classifiers import ClassifierSpec, fit, fit_arrays, predict
from .classifiers import forest as _forest
from .classifiers import gbdt as _gbdt
from .classifiers import knn as _knn
from .classifiers import svm as _svm
from .classifiers.adaboost import adaboost_fit
from .errors import EmptyList, FusepipeError, UnsatisfiableFolds
from .featureio import LabeledDataset
from .rng import derive_seed, generator

WORKERS_ENV = "FUSEPIPE_THREADS"


@dataclass
class HyperGrid:
    kind: str
    axes: dict[str, list]

    def __post_init__(self):
        for name, values in self.axes.items():
            if not isinstance(values, list) or not values:
                raise EmptyList(f"{self.kind}: axis {name!r} has no candidates")


@dataclass
class CvConfig:
    folds: int = 5
    stratified: bool = True
    seed: int = 0
    scoring: str = "accuracy"

    def __post_init__(self):
        if self.folds < 2:
            raise UnsatisfiableFolds("folds must be >= 2")
        if self.scoring != "accuracy":
            raise ValueError("only accuracy scoring is supported")


@dataclass
class LedgerEntry:
    index: int
    params: dict
    fold_scores: list[float]
    mean: float
    std: float
    note: str = ""


@dataclass
class SearchResult:
    kind: str
    best_index: int
    best_spec: ClassifierSpec
    best_score: float
    entries: list[LedgerEntry]
    best_model: object
    wall_times: list[float]  # per config, diagnostic only (non-deterministic)


def expand_grid(grid: HyperGrid, base_seed: int = 0) -> list[ClassifierSpec]:
    """Cartesian product of the axes.  Keys iterate in lexicographic order
    with the last key varying fastest; values keep their listed order."""
    keys = sorted(grid.axes.keys())
    specs = []
    for combo in itertools.product(*(grid.axes[k] for k in keys)):
        params = {k: _from_json_value(k, v) for k, v in zip(keys, combo)}
        specs.append(ClassifierSpec(kind=grid.kind, params=params, seed=base_seed).validate())
    return specs


def _from_json_value(key, v):
    if key == "hidden_layer_sizes" and isinstance(v, list):
        return tuple(v)
    return v


def seed_family_key(spec: ClassifierSpec, n_features: int) -> str:
    """Canonical string naming the random-stream family of a spec."""
    eff = dict_from_effective(spec)
    if spec.kind == "RandomForest":
        eff.pop("max_depth", None)
        eff.pop("n_estimators", None)
        eff["resolved_max_features"] = _forest.resolve_max_features(
            spec.params.get("max_features", "sqrt"), n_features
        )
        eff.pop("max_features", None)
    elif spec.kind in ("GBDT", "AdaBoost"):
        eff.pop("n_estimators", None)
    return repr(sorted(eff.items()))


def dict_from_effective(spec: ClassifierSpec) -> dict:
    eff = spec.effective_params()
    return {k: v for k, v in eff[1:]}


def fold_indices(labels: np.ndarray, cv: CvConfig) -> list[np.ndarray]:
    """Validation-index arrays of a disjoint, exhaustive k-fold partition.
    Stratified folds deal each class's shuffled indices round-robin, keeping
    per-fold class proportions within one sample of the global ones."""
    n = len(labels)
    if cv.stratified:
        counts = np.bincount(labels)
        if counts.min() < cv.folds:
            raise UnsatisfiableFolds(
                f"{cv.folds} folds but smallest class has {int(counts.min())} samples"
            )
        folds = [[] for _ in range(cv.folds)]
        for c in range(len(counts)):
            idx = np.flatnonzero(labels == c)
            perm = generator(cv.seed, "fold", c).permutation(len(idx))
            for pos, row in enumerate(idx[perm]):
                folds[pos % cv.folds].append(int(row))
        return [np.array(sorted(f), dtype=np.int64) for f in folds]
    if n < cv.folds:
        raise UnsatisfiableFolds(f"{cv.folds} folds but only {n} samples")
    perm = generator(cv.seed, "fold", "all").permutation(n)
    return [np.array(sorted(part), dtype=np.int64) for part in np.array_split(perm, cv.folds)]


def _fold_seed(cv_seed: int, kind: str, fold: int, family: str) -> int:
    return derive_seed(cv_seed, "cv", kind, fold, family)


def cross_val_score(spec: ClassifierSpec, train: LabeledDataset, cv: CvConfig) -> list[float]:
    """Per-fold accuracies using the same partition and seed derivation as
    grid_search; recomputing any ledger row from scratch lands here."""
    folds = fold_indices(train.labels, cv)
    family = seed_family_key(spec, train.features.dim)
    scores = []
    for f, val_idx in enumerate(folds):
        tr_idx = np.setdiff1d(np.arange(train.n), val_idx, assume_unique=True)
        seeded = replace(spec, seed=_fold_seed(cv.seed, spec.kind, f, family))
        try:
            model = fit_arrays(
                seeded, train.features.values[tr_idx], train.labels[tr_idx], train.n_classes
            )
            pred = model.predict_array(train.features.values[val_idx])
            scores.append(float(np.mean(pred == train.labels[val_idx])))
        except FusepipeError:
            scores.append(0.0)
    return scores


# --- work units -------------------------------------------------------------
# A unit is one independent computation producing scores for one fold and one
# or more configs.  Units are deterministic functions of (train, folds, unit
# payload), so any execution order or worker count yields the same ledger.

_WORKER_CTX: dict = {}


def _pin_blas_threads() -> None:
    """Single-thread the BLAS inside workers: the models here multiply tiny
    matrices, where thread handoff costs several times the arithmetic."""
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(1)
    except Exception:
        pass


def _init_worker(X, y, n_classes, fold_list, cv_seed):
    _pin_blas_threads()
    _WORKER_CTX["X"] = X
    _WORKER_CTX["y"] = y
    _WORKER_CTX["n_classes"] = n_classes
    _WORKER_CTX["folds"] = fold_list
    _WORKER_CTX["cv_seed"] = cv_seed


def _fold_arrays(fold: int):
    X, y = _WORKER_CTX["X"], _WORKER_CTX["y"]
    val_idx = _WORKER_CTX["folds"][fold]
    tr_idx = np.setdiff1d(np.arange(len(y)), val_idx, assume_unique=True)
    return X[tr_idx], y[tr_idx], X[val_idx], y[val_idx]


def _unit_default(unit):
    """Fit once, score once; the result serves every config index listed."""
    fold = unit["fold"]
    Xtr, ytr, Xva, yva = _fold_arrays(fold)
    kind = unit["kind"]
    seed = _fold_seed(_WORKER_CTX["cv_seed"], kind, fold, unit["family"])
    spec = ClassifierSpec(kind=kind, params=unit["params"], seed=seed)
    try:
        model = fit_arrays(spec, Xtr, ytr, _WORKER_CTX["n_classes"])
        score = float(np.mean(model.predict_array(Xva) == yva))
        note = ""
    except FusepipeError as exc:
        score, note = 0.0, f"{type(exc).__name__}: {exc}"
    return {(idx, fold): (score, note) for idx in unit["targets"]}


def _unit_knn(unit):
    """One distance computation serves every (k, weights) config."""
    fold = unit["fold"]
    Xtr, ytr, Xva, yva = _fold_arrays(fold)
    n_classes = _WORKER_CTX["n_classes"]
    resolved = unit["resolved"]
    d = _knn.distance_matrix(Xva, Xtr, resolved)
    order = np.argsort(d, axis=1, kind="stable")
    dist = np.take_along_axis(d, order, axis=1)
    out = {}
    for idx, k, weights in unit["targets"]:
        if k > len(ytr):  # same contract as KnnModel: k must not exceed n_train
            out[(idx, fold)] = (0.0, f"ParamOutOfRange: k={k} > n_train={len(ytr)}")
            continue
        pred = _knn.vote_from_neighbors(ytr, order[:, :k], dist[:, :k], n_classes, weights)
        out[(idx, fold)] = (float(np.mean(pred == yva)), "")
    return out


def _unit_forest(unit):
    """Grow one family of trees uncapped; score every (depth, count) pair by
    truncation and vote prefixes."""
    fold = unit["fold"]
    Xtr, ytr, Xva, yva = _fold_arrays(fold)
    kind = unit["kind"]
    n_classes = _WORKER_CTX["n_classes"]
    seed = _fold_seed(_WORKER_CTX["cv_seed"], kind, fold, unit["family"])
    p = unit["params"]
    n_max = unit["n_max"]
    mf = _forest.resolve_max_features(p.get("max_features", "sqrt"), Xtr.shape[1])
    trees = [
        _forest.grow_forest_tree(
            Xtr,
            ytr,
            n_classes,
            seed=seed,
            tree_index=t,
            bootstrap=p.get("bootstrap", True),
            criterion=p.get("criterion", "gini"),
            max_depth=None,
            min_samples_split=p.get("min_samples_split", 2),
            min_samples_leaf=p.get("min_samples_leaf", 1),
            max_features=mf,
        )
        for t in range(n_max)
    ]
    out = {}
    n_va = len(yva)
    rows = np.arange(n_va)
    caps = list(unit["depth_caps"])
    votes = np.zeros((len(caps), n_max, n_va), dtype=np.int64)
    for t, tree in enumerate(trees):
        votes[:, t, :] = tree.apply_multi(Xva, caps)
    for ci, cap in enumerate(caps):
        cum = np.zeros((n_va, n_classes), dtype=np.int64)
        done = 0
        for count in sorted(unit["counts"]):
            for t in range(done, count):
                cum[rows, votes[ci, t]] += 1
            done = count
            pred = np.argmax(cum, axis=1)
            score = float(np.mean(pred == yva))
            for idx in unit["cap_count_targets"][(cap, count)]:
                out[(idx, fold)] = (score, "")
    return out


def _unit_gbdt(unit):
    fold = unit["fold"]
    Xtr, ytr, Xva, yva = _fold_arrays(fold)
    kind = unit["kind"]
    n_classes = _WORKER_CTX["n_classes"]
    seed = _fold_seed(_WORKER_CTX["cv_seed"], kind, fold, unit["family"])
    params = dict(unit["params"])
    params["n_estimators"] = unit["n_max"]
    model = _gbdt.gbdt_fit(Xtr, ytr, n_classes, params, seed)
    out = {}
    for idx, count in unit["targets"]:
        pred = model.predict(Xva, n_rounds=count)
        out[(idx, fold)] = (float(np.mean(pred == yva)), "")
    return out


def _unit_ada(unit):
    fold = unit["fold"]
    Xtr, ytr, Xva, yva = _fold_arrays(fold)
    kind = unit["kind"]
    n_classes = _WORKER_CTX["n_classes"]
    seed = _fold_seed(_WORKER_CTX["cv_seed"], kind, fold, unit["family"])
    params = dict(unit["params"])
    params["n_estimators"] = unit["n_max"]
    out = {}
    try:
        model = adaboost_fit(Xtr, ytr, n_classes, params, seed)
    except FusepipeError as exc:
        note = f"{type(exc).__name__}: {exc}"
        return {(idx, fold): (0.0, note) for idx, _ in unit["targets"]}
    for idx, count in unit["targets"]:
        pred = model.predict(Xva, n_rounds=count)
        out[(idx, fold)] = (float(np.mean(pred == yva)), "")
    return out


def _unit_svm(unit):
    """One SMO iterate path per (C, gamma, coef0, class_weight) family and
    binary problem serves every (tol, max_iter) combination via snapshots."""
    fold = unit["fold"]
    Xtr, ytr, Xva, yva = _fold_arrays(fold)
    n_classes = _WORKER_CTX["n_classes"]
    kernel = unit["kernel"]
    p = unit["params"]
    C = float(p.get("C", 1.0))
    gamma = _svm.resolve_gamma(p.get("gamma", "scale"), Xtr) if kernel != "linear" else 1.0
    coef0 = float(p.get("coef0", 0.0))
    class_weight = p.get("class_weight", None)
    tols = unit["tols"]
    caps = [c if c != -1 else _svm.DEFAULT_MAX_ITER for c in unit["caps"]]
    cap_by_req = dict(zip(unit["caps"], caps))
    largest_cap = max(caps)

    K_tr = _svm.kernel_matrix(kernel, Xtr, Xtr, gamma, coef0)
    K_va = _svm.kernel_matrix(kernel, Xva, Xtr, gamma, coef0)
    problems = [1] if n_classes == 2 else list(range(n_classes))
    paths = []
    for target in problems:
        y_pm = np.where(ytr == target, 1.0, -1.0)
        Cs = _svm._balanced_C(C, y_pm, class_weight)
        paths.append((y_pm, _svm.smo_solve_path(K_tr, y_pm, Cs, tols, largest_cap)))

    out = {}
    for idx, tol, cap_req in unit["targets"]:
        cap = cap_by_req[cap_req]
        decisions = []
        failed = None
        for y_pm, path in paths:
            hit = path.get(float(tol))
            if hit is None or hit[2] > cap:
                failed = f"NoConvergence: tol={tol} not reached within {cap} updates"
                break
            alpha, b, _ = hit
            decisions.append(K_va @ (alpha * y_pm) + b)
        if failed:
            out[(idx, fold)] = (0.0, failed)
            continue
        if len(decisions) == 1:
            pred = (decisions[0] >= 0.0).astype(np.int64)
        else:
            pred = np.argmax(np.column_stack(decisions), axis=1)
        out[(idx, fold)] = (float(np.mean(pred == yva)), "")
    return out


_UNIT_FNS = {
    "default": _unit_default,
    "knn": _unit_knn,
    "forest": _unit_forest,
    "gbdt": _unit_gbdt,
    "ada": _unit_ada,
    "svm": _unit_svm,
}


def _plan_units(kind: str, specs: list[ClassifierSpec], n_folds: int, n_features: int):
    units = _plan_units_inner(kind, specs, n_folds, n_features)
    for u in units:
        u["kind"] = kind
    return units


def _plan_units_inner(kind: str, specs: list[ClassifierSpec], n_folds: int, n_features: int):
    units = []
    if kind == "KNN":
        groups: dict = {}
        for i, s in enumerate(specs):
            resolved = _knn.resolve_metric(s.params.get("metric", "euclidean"), s.params.get("p", 2))
            key = (resolved, s.params.get("n_neighbors", 5), s.params.get("weights", "uniform"))
            groups.setdefault(resolved, {}).setdefault(key[1:], []).append(i)
        for f in range(n_folds):
            for resolved, combos in groups.items():
                targets = []
                for (k, weights), idxs in combos.items():
                    targets.extend((idx, k, weights) for idx in idxs)
                units.append(
                    {"fn": "knn", "fold": f, "resolved": resolved, "targets": sorted(targets)}
                )
        return units

    if kind == "RandomForest":
        families: dict = {}
        for i, s in enumerate(specs):
            fam = seed_family_key(s, n_features)
            cap = s.params.get("max_depth", None)
            count = s.params.get("n_estimators", 100)
            entry = families.setdefault(
                fam, {"params": s.params, "caps": set(), "counts": set(), "targets": {}}
            )
            entry["caps"].add(cap)
            entry["counts"].add(count)
            entry["targets"].setdefault((cap, count), []).append(i)
        for f in range(n_folds):
            for fam, entry in families.items():
                units.append(
                    {
                        "fn": "forest",
                        "fold": f,
                        "family": fam,
                        "params": entry["params"],
                        "depth_caps": sorted(entry["caps"], key=lambda c: (c is None, c)),
                        "counts": sorted(entry["counts"]),
                        "n_max": max(entry["counts"]),
                        "cap_count_targets": entry["targets"],
                    }
                )
        return units

    if kind in ("GBDT", "AdaBoost"):
        families = {}
        for i, s in enumerate(specs):
            fam = seed_family_key(s, n_features)
            count = s.params.get("n_estimators", 100)
            entry = families.setdefault(fam, {"params": s.params, "targets": []})
            entry["targets"].append((i, count))
        fn = "gbdt" if kind == "GBDT" else "ada"
        for f in range(n_folds):
            for fam, entry in families.items():
                units.append(
                    {
                        "fn": fn,
                        "fold": f,
                        "family": fam,
                        "params": entry["params"],
                        "n_max": max(c for _, c in entry["targets"]),
                        "targets": sorted(entry["targets"]),
                    }
                )
        return units

    if kind.startswith("SVM-"):
        kernel = kind.split("-", 1)[1].lower()
        families = {}
        for i, s in enumerate(specs):
            eff = dict_from_effective(s)
            tol = eff.pop("tol", 1e-3)
            cap = eff.pop("max_iter", -1)
            fam = repr(sorted(eff.items()))
            entry = families.setdefault(
                fam, {"params": s.params, "tols": set(), "caps": set(), "targets": []}
            )
            entry["tols"].add(float(tol))
            entry["caps"].add(int(cap))
            entry["targets"].append((i, float(tol), int(cap)))
        for f in range(n_folds):
            for fam, entry in families.items():
                units.append(
                    {
                        "fn": "svm",
                        "fold": f,
                        "kernel": kernel,
                        "params": entry["params"],
                        "tols": sorted(entry["tols"], reverse=True),
                        "caps": sorted(entry["caps"]),
                        "targets": sorted(entry["targets"]),
                    }
                )
        return units

    # default: share one fit among configs with identical effective params
    groups = {}
    for i, s in enumerate(specs):
        groups.setdefault(s.effective_params(), []).append(i)
    for f in range(n_folds):
        for eff, idxs in groups.items():
            rep = specs[idxs[0]]
            units.append(
                {
                    "fn": "default",
                    "fold": f,
                    "family": seed_family_key(rep, n_features),
                    "params": rep.params,
                    "targets": idxs,
                }
            )
    return units


def _run_unit(unit):
    start = time.perf_counter()
    result = _UNIT_FNS[unit["fn"]](unit)
    return result, time.perf_counter() - start, unit


_POOL: dict = {"key": None, "pool": None}


def _pool_key(n_workers, init_args):
    X, y, folds, seed = init_args[0], init_args[1], init_args[3], init_args[4]
    h = hashlib.sha256()
    h.update(X.tobytes())
    h.update(y.tobytes())
    for f in folds:
        h.update(np.asarray(f).tobytes())
    h.update(str((seed, n_workers)).encode())
    return h.hexdigest()


def _shared_pool(n_workers, init_args) -> ProcessPoolExecutor:
    """One worker pool per (training data, folds, seed, worker count):
    consecutive searches over the same split reuse the same processes."""
    key = _pool_key(n_workers, init_args)
    if _POOL["key"] != key:
        shutdown_pool()
        _POOL["pool"] = ProcessPoolExecutor(
            max_workers=n_workers, initializer=_init_worker, initargs=init_args
        )
        _POOL["key"] = key
    return _POOL["pool"]


def shutdown_pool() -> None:
    if _POOL["pool"] is not None:
        _POOL["pool"].shutdown(wait=True)
        _POOL["pool"] = None
        _POOL["key"] = None


atexit.register(shutdown_pool)


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def grid_search(
    grid: HyperGrid,
    train: LabeledDataset,
    cv: CvConfig,
    *,
    workers: int | None = 1,
) -> SearchResult:
    """Exhaustive search over the grid; ties break to the lower fold std,
    then the earliest enumeration index.  The winner is refit on the full
    training split."""
    specs = expand_grid(grid)
    folds = fold_indices(train.labels, cv)
    units = _plan_units(grid.kind, specs, cv.folds, train.features.dim)
    n_workers = resolve_workers(workers)

    scores = np.full((len(specs), cv.folds), np.nan)
    notes: dict[int, str] = {}
    wall = np.zeros(len(specs))

    fold_list = [np.asarray(f) for f in folds]
    init_args = (
        train.features.values,
        train.labels,
        train.n_classes,
        fold_list,
        cv.seed,
    )

    def consume(result, seconds, unit):
        touched = set()
        for (idx, fold), (score, note) in result.items():
            scores[idx, fold] = score
            if note:
                notes[idx] = note
            touched.add(idx)
        for idx in touched:
            wall[idx] += seconds

    if n_workers == 1 or len(units) == 1:
        _init_worker(*init_args)
        for unit in units:
            consume(*_run_unit(unit))
    else:
        pool = _shared_pool(n_workers, init_args)
        for result, seconds, unit in pool.map(_run_unit, units, chunksize=1):
            consume(result, seconds, unit)

    assert not np.isnan(scores).any(), "every (config, fold) must be scored"
    means = scores.mean(axis=1)
    stds = scores.std(axis=1)

    entries = [
        LedgerEntry(
            index=i,
            params=dict(specs[i].params),
            fold_scores=[float(s) for s in scores[i]],
            mean=float(means[i]),
            std=float(stds[i]),
            note=notes.get(i, ""),
        )
        for i in range(len(specs))
    ]
    best_index = min(range(len(specs)), key=lambda i: (-means[i], stds[i], i))
    family = seed_family_key(specs[best_index], train.features.dim)
    refit_seed = derive_seed(cv.seed, "refit", grid.kind, family)
    best_spec = replace(specs[best_index], seed=refit_seed)
    best_model = fit(best_spec, train)
    return SearchResult(
        kind=grid.kind,
        best_index=best_index,
        best_spec=best_spec,
        best_score=float(means[best_index]),
        entries=entries,
        best_model=best_model,
        wall_times=[float(w) for w in wall],
    )


def ledger_to_csv(result: SearchResult) -> str:
    """Deterministic CSV of the search ledger (wall times are kept out so
    reruns compare byte-identically)."""
    n_folds = len(result.entries[0].fold_scores) if result.entries else 0
    header = ["index", "params"] + [f"fold{f}" for f in range(n_folds)] + ["mean", "std", "note"]
    lines = [",".join(header)]
    for e in result.entries:
        params = json.dumps(e.params, sort_keys=True).replace('"', "'")
        row = (
            [str(e.index), f'"{params}"']
            + [format(s, ".17g") for s in e.fold_scores]
            + [format(e.mean, ".17g"), format(e.std, ".17g"), e.note]
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


# --- bundled search spaces ---------------------------------------------------


def load_grid_file(path) -> dict[str, HyperGrid]:
    doc = json.loads(Path(path).read_text())
    return {kind: HyperGrid(kind=kind, axes=axes) for kind, axes in doc.items()}


def builtin_grids(name: str) -> dict[str, HyperGrid]:
    """The two bundled search spaces: 'table4' (the full published spaces)
    and 'prose' (the narrower alternates)."""
    if name not in ("table4", "prose"):
        raise ValueError(f"unknown grid set {name!r}")
    ref = resources.files("fusepipe.data").joinpath(f"grids_{name}.json")
    doc = json.loads(ref.read_text())
    return {kind: HyperGrid(kind=kind, axes=axes) for kind, axes in doc.items()}
