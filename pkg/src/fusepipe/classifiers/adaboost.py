"""Multiclass AdaBoost (SAMME) over depth-limited trees."""

from __future__ import annotations

import math

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateWeights
from ._tree import Tree, grow_classification_tree

_WEIGHT_FLOOR = 1e-300


@dataclass
class AdaRound:
    """Per-round trace kept when the fit is asked to record one."""

    error: float
    alpha: float
    sample_weights: np.ndarray  # after the round's update, normalised
    predictions: np.ndarray  # weak learner's training predictions


@dataclass
class AdaModel:
    learners: list[Tree]
    alphas: list[float]
    n_classes: int
    trace: list[AdaRound] | None = None

    def decision_scores(self, X: np.ndarray, n_rounds: int | None = None) -> np.ndarray:
        take = len(self.learners) if n_rounds is None else min(n_rounds, len(self.learners))
        scores = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for tree, alpha in zip(self.learners[:take], self.alphas[:take]):
            scores[rows, tree.apply(X)] += alpha
        return scores

    def predict(self, X: np.ndarray, n_rounds: int | None = None) -> np.ndarray:
        return np.argmax(self.decision_scores(X, n_rounds), axis=1)


def adaboost_fit(X, y, n_classes, params, seed: int, record_trace: bool = False) -> AdaModel:
    """Boost depth-limited trees on reweighted samples.

    Round m fits a weak tree on the current weights, takes its weighted error
    e_m and weight alpha_m = learning_rate * (ln((1-e_m)/e_m) + ln(K-1)),
    then multiplies misclassified sample weights by exp(alpha_m) and
    renormalises.  Rounds stop early on a perfect learner (kept with
    alpha 1) or one no better than chance (dropped).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    n_estimators = int(params.get("n_estimators", 100))
    learning_rate = float(params.get("learning_rate", 1.0))
    depth = int(params.get("max_depth", 1))

    w = np.full(n, 1.0 / n)
    learners: list[Tree] = []
    alphas: list[float] = []
    trace: list[AdaRound] = []
    chance = 1.0 - 1.0 / n_classes

    for m in range(n_estimators):
        tree = grow_classification_tree(
            X, y, n_classes, criterion="gini", max_depth=depth, sample_weight=w
        )
        pred = tree.apply(X)
        miss = pred != y
        # left-to-right sum: bit-reproducible by a naive loop
        err = float(sum(w[miss].tolist()))

        if err <= 0.0:
            learners.append(tree)
            alphas.append(1.0)
            if record_trace:
                trace.append(AdaRound(0.0, 1.0, w.copy(), pred))
            break
        if err >= chance:
            break  # no better than chance: drop and stop

        alpha = learning_rate * (math.log((1.0 - err) / err) + math.log(n_classes - 1.0))
        if alpha > 700.0:  # exp would overflow: the reweighting is degenerate
            raise DegenerateWeights(
                f"stage weight {alpha:.1f} at round {m} would overflow the update"
            )
        learners.append(tree)
        alphas.append(alpha)

        # scalar libm arithmetic keeps the update bit-reproducible by a naive
        # reimplementation (numpy's vectorised exp differs by an ulp)
        w = np.where(miss, w * math.exp(alpha), w)
        total = float(sum(w.tolist()))
        if total < _WEIGHT_FLOOR:
            raise DegenerateWeights(f"sample weight mass collapsed at round {m}")
        w = w / total
        if record_trace:
            trace.append(AdaRound(err, alpha, w.copy(), pred))

    if not learners:
        raise DegenerateWeights("first weak learner is no better than chance")

    return AdaModel(learners=learners, alphas=alphas, n_classes=n_classes,
                    trace=trace if record_trace else None)


def adaboost_predict(model: AdaModel, x) -> int:
    return int(model.predict(np.asarray(x, dtype=np.float64)[None, :])[0])
