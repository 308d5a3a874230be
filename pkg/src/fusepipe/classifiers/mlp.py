"""Multilayer perceptron trained by mini-batch Adam (default), SGD with
momentum, or full-batch L-BFGS (scipy).

Hidden layers use the configured activation; the output layer is linear.
The default loss is softmax cross-entropy; ``loss_kind="mse"`` switches to
mean squared error against one-hot targets (sum over outputs, mean over
samples).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ..errors import ParamOutOfRange, ShapeMismatch, SingleClass
from ..rng import generator

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
DEFAULT_LR = 0.001
DEFAULT_BATCH = 32
DEFAULT_TOL = 1e-4
DEFAULT_PATIENCE = 10

ACTIVATIONS = ("relu", "tanh", "logistic")


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x)."""
    return np.maximum(0.0, x)


def _act(name, z):
    if name == "relu":
        return relu(z)
    if name == "tanh":
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))  # logistic


def _act_grad(name, z, a):
    # derivative expressed via pre-activation z or activation a
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    return a * (1.0 - a)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(state: AdamState, params, grads, *, eta=DEFAULT_LR, beta1=ADAM_BETA1,
              beta2=ADAM_BETA2, eps=ADAM_EPS):
    """One Adam update: moment recurrences, bias correction, then the step
    theta <- theta - eta * m_hat / (sqrt(v_hat) + eps)."""
    state.t += 1
    t = state.t
    new_params = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / (1.0 - beta1**t)
        v_hat = state.v[i] / (1.0 - beta2**t)
        new_params.append(p - eta * m_hat / (np.sqrt(v_hat) + eps))
    return new_params


@dataclass
class MlpModel:
    weights: list[np.ndarray]  # (fan_in, fan_out) per layer
    biases: list[np.ndarray]
    activation: str
    loss_kind: str
    n_classes: int

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def forward(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.weights[0].shape[0]:
            raise ShapeMismatch(
                f"input dim {X.shape[1]} != model input dim {self.weights[0].shape[0]}"
            )
        h = X
        last = len(self.weights) - 1
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = z if l == last else _act(self.activation, z)
        return h

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.forward(X), axis=1)


def mlp_forward(model: MlpModel, x) -> np.ndarray:
    """Class scores for a single feature vector."""
    return model.forward(np.asarray(x, dtype=np.float64)[None, :])[0]


def init_params(layer_sizes, seed):
    """Glorot-uniform weights, zero biases, from the seeded stream."""
    rng = generator(seed, "init")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def loss_and_grad(weights, biases, X, onehot, activation, loss_kind):
    """Mean loss over the batch and gradients w.r.t. every parameter."""
    n = X.shape[0]
    last = len(weights) - 1
    zs, acts = [], [X]
    h = X
    for l, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        zs.append(z)
        h = z if l == last else _act(activation, z)
        acts.append(h)
    out = acts[-1]

    if loss_kind == "cross_entropy":
        shifted = out - out.max(axis=1, keepdims=True)
        logsum = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        logp = shifted - logsum
        loss = float(-np.sum(onehot * logp) / n)
        delta = (np.exp(logp) - onehot) / n
    else:  # mse on one-hot targets
        diff = out - onehot
        loss = float(np.sum(diff * diff) / n)
        delta = 2.0 * diff / n

    gw = [None] * len(weights)
    gb = [None] * len(weights)
    for l in range(last, -1, -1):
        gw[l] = acts[l].T @ delta
        gb[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l].T) * _act_grad(activation, zs[l - 1], acts[l])
    return loss, gw, gb


def _flatten(arrays):
    return np.concatenate([a.ravel() for a in arrays])


def _unflatten(vec, templates):
    out, pos = [], 0
    for t in templates:
        out.append(vec[pos : pos + t.size].reshape(t.shape))
        pos += t.size
    return out


def train_mlp(X, y, n_classes, params, seed: int) -> MlpModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise SingleClass("MLP training needs at least 2 classes present")

    hidden = tuple(params.get("hidden_layer_sizes", (100,)))
    activation = params.get("activation", "relu")
    if activation not in ACTIVATIONS:
        raise ParamOutOfRange(f"activation {activation!r} not in {ACTIVATIONS}")
    solver = params.get("solver", "adam")
    max_iter = int(params.get("max_iter", 1000))
    momentum = float(params.get("momentum", 0.9))
    loss_kind = params.get("loss_kind", "cross_entropy")
    lr = float(params.get("learning_rate_init", DEFAULT_LR))
    batch_size = int(params.get("batch_size", DEFAULT_BATCH))
    tol = float(params.get("tol", DEFAULT_TOL))
    patience = int(params.get("n_iter_no_change", DEFAULT_PATIENCE))

    sizes = [X.shape[1], *hidden, n_classes]
    weights, biases = init_params(sizes, seed)
    onehot = np.eye(n_classes)[y]

    if solver == "lbfgs":
        templates = weights + biases

        def objective(vec):
            arrs = _unflatten(vec, templates)
            w, b = arrs[: len(weights)], arrs[len(weights) :]
            loss, gw, gb = loss_and_grad(w, b, X, onehot, activation, loss_kind)
            return loss, _flatten(gw + gb)

        res = optimize.minimize(
            objective,
            _flatten(templates),
            jac=True,
            method="L-BFGS-B",
            # stop on the same tolerance the iterative solvers use
            options={"maxiter": max_iter, "gtol": tol, "ftol": tol * 1e-3},
        )
        arrs = _unflatten(res.x, templates)
        weights, biases = arrs[: len(weights)], arrs[len(weights) :]
        return MlpModel(weights, biases, activation, loss_kind, n_classes)

    if solver not in ("adam", "sgd"):
        raise ParamOutOfRange(f"solver {solver!r} not in (adam, sgd, lbfgs)")

    n = X.shape[0]
    shuffle_rng = generator(seed, "shuffle")

    # train on views into one flat parameter vector: the update becomes a
    # couple of whole-vector operations per step (same elementwise
    # recurrences as adam_step, just unsliced)
    templates = weights + biases
    flat = _flatten(templates)
    views = []
    pos = 0
    for t in templates:
        views.append(flat[pos : pos + t.size].reshape(t.shape))
        pos += t.size
    weights, biases = views[: len(weights)], views[len(weights) :]

    m_vec = np.zeros_like(flat)
    v_vec = np.zeros_like(flat)
    t_step = 0

    best_loss = np.inf
    stale = 0
    for _epoch in range(max_iter):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            loss, gw, gb = loss_and_grad(
                weights, biases, X[batch], onehot[batch], activation, loss_kind
            )
            epoch_loss += loss * len(batch)
            g = _flatten(gw + gb)
            if solver == "adam":
                t_step += 1
                m_vec *= ADAM_BETA1
                m_vec += (1.0 - ADAM_BETA1) * g
                v_vec *= ADAM_BETA2
                v_vec += (1.0 - ADAM_BETA2) * g * g
                m_hat = m_vec / (1.0 - ADAM_BETA1**t_step)
                v_hat = v_vec / (1.0 - ADAM_BETA2**t_step)
                flat -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            else:
                v_vec *= momentum
                v_vec -= lr * g
                flat += v_vec
        epoch_loss /= n
        # stop once the epoch loss has not improved by tol for `patience` epochs
        if epoch_loss < best_loss - tol:
            best_loss = epoch_loss
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break

    return MlpModel(
        [w.copy() for w in weights], [b.copy() for b in biases],
        activation, loss_kind, n_classes,
    )
