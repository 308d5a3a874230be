"""k-nearest-neighbour classifier with deterministic tie handling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParamOutOfRange


def resolve_metric(metric: str, p: int) -> tuple:
    """Collapse (metric, p) to the distance actually computed; minkowski
    with p=1/p=2 is manhattan/euclidean."""
    if metric == "minkowski":
        if p == 1:
            return ("manhattan",)
        if p == 2:
            return ("euclidean",)
        return ("minkowski", p)
    return (metric,)


def distance_matrix(A: np.ndarray, B: np.ndarray, resolved: tuple) -> np.ndarray:
    """Pairwise distances, rows of A vs rows of B."""
    kind = resolved[0]
    if kind == "euclidean":
        d2 = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
        return np.sqrt(np.clip(d2, 0.0, None))
    diff = np.abs(A[:, None, :] - B[None, :, :])
    if kind == "manhattan":
        return diff.sum(axis=2)
    p = resolved[1]
    return (diff**p).sum(axis=2) ** (1.0 / p)


@dataclass
class KnnModel:
    train_X: np.ndarray
    train_y: np.ndarray
    n_classes: int
    k: int
    metric: str = "euclidean"
    p: int = 2
    weights: str = "uniform"

    def __post_init__(self):
        if not 1 <= self.k <= len(self.train_y):
            raise ParamOutOfRange(f"k={self.k} outside [1, n_train={len(self.train_y)}]")

    def neighbor_order(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Training indices sorted by (distance, index) per query row, plus
        the matching distances."""
        d = distance_matrix(X, self.train_X, resolve_metric(self.metric, self.p))
        order = np.argsort(d, axis=1, kind="stable")  # stable = lower index wins ties
        return order, np.take_along_axis(d, order, axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        order, dist = self.neighbor_order(X)
        return vote_from_neighbors(
            self.train_y, order[:, : self.k], dist[:, : self.k], self.n_classes, self.weights
        )


def vote_from_neighbors(train_y, nn_idx, nn_dist, n_classes, weights) -> np.ndarray:
    """Vote among the k supplied neighbours (already distance-sorted).

    Uniform votes take the modal label; a modal tie goes to the tied class
    appearing earliest in the neighbour list (for the nearest neighbour's own
    class this reduces to the plain nearest-neighbour rule).  Distance
    weighting uses 1/d, with exact hits taking the vote outright.
    """
    n, k = nn_idx.shape
    labels = train_y[nn_idx]
    if weights == "uniform":
        w = np.ones((n, k))
    else:
        zero = nn_dist <= 0.0
        has_zero = zero.any(axis=1)
        with np.errstate(divide="ignore"):
            w = np.where(nn_dist > 0, 1.0 / np.where(nn_dist > 0, nn_dist, 1.0), 0.0)
        w[has_zero] = zero[has_zero].astype(float)

    scores = np.zeros((n, n_classes))
    for c in range(n_classes):
        scores[:, c] = np.where(labels == c, w, 0.0).sum(axis=1)
    best = scores.max(axis=1)
    out = np.empty(n, dtype=np.int64)
    tied = (scores == best[:, None]).sum(axis=1) > 1
    out[~tied] = np.argmax(scores[~tied], axis=1)
    for i in np.flatnonzero(tied):
        tied_classes = np.flatnonzero(scores[i] == best[i])
        in_tie = np.isin(labels[i], tied_classes)
        out[i] = labels[i][np.argmax(in_tie)]
    return out


def knn_fit(X, y, n_classes, params) -> KnnModel:
    return KnnModel(
        train_X=np.asarray(X, dtype=np.float64),
        train_y=np.asarray(y, dtype=np.int64),
        n_classes=n_classes,
        k=int(params.get("n_neighbors", 5)),
        metric=params.get("metric", "euclidean"),
        p=int(params.get("p", 2)),
        weights=params.get("weights", "uniform"),
    )


def knn_predict(model: KnnModel, x) -> int:
    """Single-vector form of the prediction contract."""
    return int(model.predict(np.asarray(x, dtype=np.float64)[None, :])[0])
