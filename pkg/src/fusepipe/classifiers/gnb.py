"""Gaussian naive Bayes with variance smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParamOutOfRange

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GnbModel:
    priors: np.ndarray  # (K,)
    means: np.ndarray  # (K, d)
    variances: np.ndarray  # (K, d), already smoothed
    var_smoothing: float

    @property
    def n_classes(self) -> int:
        return len(self.priors)

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        """log P(y) + sum_j log N(x_j; mu_yj, sigma_yj^2), shape (n, K)."""
        n = X.shape[0]
        out = np.empty((n, self.n_classes))
        for c in range(self.n_classes):
            diff = X - self.means[c]
            out[:, c] = np.log(self.priors[c]) - 0.5 * np.sum(
                _LOG_2PI + np.log(self.variances[c]) + diff**2 / self.variances[c], axis=1
            )
        return out

    def posteriors(self, X: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.joint_log_likelihood(X), axis=1)


def gnb_fit(X, y, n_classes, params) -> GnbModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    var_smoothing = float(params.get("var_smoothing", 1e-9))
    priors = params.get("priors", None)

    counts = np.bincount(y, minlength=n_classes).astype(float)
    if priors is None:
        pri = counts / counts.sum()
    else:
        pri = np.asarray(priors, dtype=np.float64)
        if pri.shape != (n_classes,):
            raise ParamOutOfRange(f"priors must have length {n_classes}")
        if np.any(pri <= 0) or abs(pri.sum() - 1.0) > 1e-8:
            raise ParamOutOfRange("priors must be positive and sum to 1")

    means = np.empty((n_classes, X.shape[1]))
    variances = np.empty_like(means)
    for c in range(n_classes):
        Xc = X[y == c]
        means[c] = Xc.mean(axis=0)
        variances[c] = Xc.var(axis=0)  # maximum likelihood
    # stabilised by a fraction of the largest per-feature variance
    epsilon = var_smoothing * float(X.var(axis=0).max())
    variances += epsilon
    if np.any(variances <= 0):
        variances = np.maximum(variances, 1e-300)
    return GnbModel(priors=pri, means=means, variances=variances, var_smoothing=var_smoothing)


def gnb_predict(model: GnbModel, x) -> tuple[int, np.ndarray]:
    """Class of a single vector plus its posterior distribution."""
    X = np.asarray(x, dtype=np.float64)[None, :]
    post = model.posteriors(X)[0]
    return int(model.predict(X)[0]), post
