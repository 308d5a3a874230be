"""Gradient-boosted trees with second-order (Newton) steps on logistic loss.

Binary problems train one booster; multiclass trains one booster per class
(one-vs-rest).  Row subsampling is drawn per round from a stream keyed by
(seed, round), so the first m rounds of a long run equal a run asked for m
rounds outright.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..rng import derive_seed, generator
from ._tree import Tree, grow_regression_tree

REG_LAMBDA = 1.0
_PRIOR_CLIP = 1e-12


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(y: np.ndarray, scores: np.ndarray) -> float:
    """Mean negative log-likelihood of binary labels under sigmoid(scores)."""
    # log(1 + exp(-m)) with m = (2y-1) * score, computed stably
    m = np.where(y == 1, scores, -scores)
    return float(np.mean(np.logaddexp(0.0, -m)))


@dataclass
class _Booster:
    base_score: float
    trees: list[Tree]
    learning_rate: float

    def scores(self, X: np.ndarray, n_rounds: int | None = None) -> np.ndarray:
        take = len(self.trees) if n_rounds is None else min(n_rounds, len(self.trees))
        out = np.full(X.shape[0], self.base_score)
        for tree in self.trees[:take]:
            out += self.learning_rate * tree.apply(X)
        return out


def _fit_booster(X, y01, params, seed) -> _Booster:
    n = len(y01)
    n_estimators = int(params.get("n_estimators", 100))
    lr = float(params.get("learning_rate", 0.1))
    max_depth = int(params.get("max_depth", 3))
    subsample = float(params.get("subsample", 1.0))

    prior = float(np.clip(np.mean(y01), _PRIOR_CLIP, 1.0 - _PRIOR_CLIP))
    base = float(np.log(prior / (1.0 - prior)))
    scores = np.full(n, base)
    trees: list[Tree] = []
    for m in range(n_estimators):
        p = _sigmoid(scores)
        grad = p - y01
        hess = p * (1.0 - p)
        if subsample < 1.0:
            rng = generator(seed, "round", m)
            take = max(1, int(round(subsample * n)))
            rows = np.sort(rng.permutation(n)[:take])
        else:
            rows = np.arange(n)
        tree = grow_regression_tree(
            X[rows], grad[rows], hess[rows], max_depth=max_depth, reg_lambda=REG_LAMBDA
        )
        trees.append(tree)
        scores += lr * tree.apply(X)
    return _Booster(base_score=base, trees=trees, learning_rate=lr)


@dataclass
class GbdtModel:
    boosters: list[_Booster]  # one for binary, K for one-vs-rest
    n_classes: int

    def staged_scores(self, X: np.ndarray, n_rounds: int | None = None) -> np.ndarray:
        """(n, K) margin scores after n_rounds trees (all when None)."""
        if self.n_classes == 2:
            s = self.boosters[0].scores(X, n_rounds)
            return np.column_stack([-s, s])
        return np.column_stack([b.scores(X, n_rounds) for b in self.boosters])

    def predict_proba(self, X: np.ndarray, n_rounds: int | None = None) -> np.ndarray:
        if self.n_classes == 2:
            p1 = _sigmoid(self.boosters[0].scores(X, n_rounds))
            return np.column_stack([1.0 - p1, p1])
        raw = _sigmoid(self.staged_scores(X, n_rounds))
        return raw / raw.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray, n_rounds: int | None = None) -> np.ndarray:
        return np.argmax(self.staged_scores(X, n_rounds), axis=1)

    def training_loss_curve(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Binary-only diagnostic: loss after 0..M rounds."""
        assert self.n_classes == 2
        booster = self.boosters[0]
        scores = np.full(X.shape[0], booster.base_score)
        losses = [logistic_loss(y, scores)]
        for tree in booster.trees:
            scores += booster.learning_rate * tree.apply(X)
            losses.append(logistic_loss(y, scores))
        return np.array(losses)


def gbdt_fit(X, y, n_classes, params, seed: int) -> GbdtModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if n_classes == 2:
        boosters = [_fit_booster(X, (y == 1).astype(float), params, seed)]
    else:
        boosters = [
            _fit_booster(X, (y == c).astype(float), params, derive_seed(seed, "ovr", c))
            for c in range(n_classes)
        ]
    return GbdtModel(boosters=boosters, n_classes=n_classes)


def gbdt_predict(model: GbdtModel, x) -> tuple[int, np.ndarray]:
    X = np.asarray(x, dtype=np.float64)[None, :]
    return int(model.predict(X)[0]), model.predict_proba(X)[0]
