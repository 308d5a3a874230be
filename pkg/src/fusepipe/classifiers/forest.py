"""Random forest: seeded bootstraps, per-node feature subsets, majority vote."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParamOutOfRange
from ..rng import derive_seed, generator
from ._tree import Tree, grow_classification_tree


def resolve_max_features(max_features, d: int) -> int:
    """Number of features drawn per node.  'auto' follows the sqrt rule."""
    if max_features in ("auto", "sqrt"):
        return max(1, int(math.floor(math.sqrt(d))))
    if max_features == "log2":
        return max(1, int(math.floor(math.log2(d))))
    if max_features is None:
        return d
    raise ParamOutOfRange(f"max_features {max_features!r} not in (auto, sqrt, log2, None)")


def bootstrap_indices(n: int, seed: int, tree_index: int) -> np.ndarray:
    rng = generator(seed, "bootstrap", tree_index)
    return rng.integers(0, n, size=n)


def grow_forest_tree(
    X,
    y,
    n_classes,
    *,
    seed: int,
    tree_index: int,
    bootstrap: bool,
    criterion: str,
    max_depth: int | None,
    min_samples_split: int,
    min_samples_leaf: int,
    max_features: int,
) -> Tree:
    if bootstrap:
        idx = bootstrap_indices(len(y), seed, tree_index)
        Xt, yt = X[idx], y[idx]
    else:
        Xt, yt = X, y
    return grow_classification_tree(
        Xt,
        yt,
        n_classes,
        criterion=criterion,
        max_depth=max_depth,
        min_samples_split=min_samples_split,
        min_samples_leaf=min_samples_leaf,
        max_features=max_features,
        tree_seed=derive_seed(seed, "tree", tree_index),
    )


@dataclass
class RfModel:
    trees: list[Tree]
    n_classes: int
    bootstrap: bool
    criterion: str
    oob_score: float | None = None

    def vote_matrix(self, X: np.ndarray) -> np.ndarray:
        """(n_samples, n_classes) vote counts across trees."""
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, tree.apply(X)] += 1
        return votes

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.vote_matrix(X), axis=1)  # tie -> smaller class index


def rf_fit(X, y, n_classes, params, seed: int) -> RfModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    n_estimators = int(params.get("n_estimators", 100))
    max_depth = params.get("max_depth", None)
    mss = int(params.get("min_samples_split", 2))
    msl = int(params.get("min_samples_leaf", 1))
    mf = resolve_max_features(params.get("max_features", "sqrt"), d)
    bootstrap = bool(params.get("bootstrap", True))
    criterion = params.get("criterion", "gini")
    want_oob = bool(params.get("oob_score", False)) and bootstrap
    if "random_state" in params and params["random_state"] is not None:
        seed = derive_seed(seed, "random_state", int(params["random_state"]))

    trees = []
    oob_votes = np.zeros((n, n_classes), dtype=np.int64) if want_oob else None
    for t in range(n_estimators):
        tree = grow_forest_tree(
            X,
            y,
            n_classes,
            seed=seed,
            tree_index=t,
            bootstrap=bootstrap,
            criterion=criterion,
            max_depth=max_depth,
            min_samples_split=mss,
            min_samples_leaf=msl,
            max_features=mf,
        )
        trees.append(tree)
        if want_oob:
            in_bag = np.zeros(n, dtype=bool)
            in_bag[bootstrap_indices(n, seed, t)] = True
            out_rows = np.flatnonzero(~in_bag)
            if len(out_rows):
                oob_votes[out_rows, tree.apply(X[out_rows])] += 1

    oob = None
    if want_oob:
        seen = oob_votes.sum(axis=1) > 0
        if seen.any():
            oob = float(np.mean(np.argmax(oob_votes[seen], axis=1) == y[seen]))
    return RfModel(trees=trees, n_classes=n_classes, bootstrap=bootstrap,
                   criterion=criterion, oob_score=oob)


def rf_predict(model: RfModel, x) -> int:
    return int(model.predict(np.asarray(x, dtype=np.float64)[None, :])[0])
