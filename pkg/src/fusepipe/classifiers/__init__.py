"""Uniform fit/predict dispatch over the nine classifier kinds.

A :class:`ClassifierSpec` names a kind, a parameter map restricted to that
kind's declared vocabulary, and a seed.  ``fit`` validates and dispatches;
``predict`` is pure and deterministic.  Trained models serialize to a
versioned JSON document that reloads to bit-identical predictions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ParamOutOfRange, SingleClass, UnknownKind
from ..featureio import FeatureMatrix, LabeledDataset
from . import adaboost as _ada
from . import forest as _forest
from . import gbdt as _gbdt
from . import gnb as _gnb
from . import knn as _knn
from . import mlp as _mlp
from . import svm as _svm
from ._tree import Tree

KINDS = (
    "MLP",
    "GBDT",
    "GaussianNB",
    "AdaBoost",
    "KNN",
    "RandomForest",
    "SVM-linear",
    "SVM-sigmoid",
    "SVM-RBF",
)

MODEL_FORMAT_VERSION = 1


def _is_int(v, lo=None, hi=None):
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        return False
    return (lo is None or v >= lo) and (hi is None or v <= hi)


def _is_real(v, lo=None, lo_open=False, hi=None):
    if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
        return False
    v = float(v)
    if lo is not None and (v <= lo if lo_open else v < lo):
        return False
    return hi is None or v <= hi


def _is_layer_sizes(v):
    return (
        isinstance(v, (tuple, list))
        and len(v) >= 1
        and all(_is_int(s, lo=1) for s in v)
    )


def _is_priors(v):
    return v is None or (isinstance(v, (tuple, list)) and all(_is_real(p, lo=0, lo_open=True) for p in v))


def _one_of(*options):
    return lambda v: v in options


def _is_depth(v):
    return v is None or _is_int(v, lo=1)


# Parameter vocabulary per kind: the hyperparameter names of the search-space
# table, plus documented extensions (marked "ext").
_VOCAB: dict[str, dict] = {
    "GBDT": {
        "max_depth": lambda v: _is_int(v, lo=1),
        "learning_rate": lambda v: _is_real(v, lo=0, lo_open=True),
        "subsample": lambda v: _is_real(v, lo=0, lo_open=True, hi=1),
        "n_estimators": lambda v: _is_int(v, lo=0),
    },
    "MLP": {
        "hidden_layer_sizes": _is_layer_sizes,
        "activation": _one_of(*_mlp.ACTIVATIONS),
        "solver": _one_of("adam", "sgd", "lbfgs"),
        "max_iter": lambda v: _is_int(v, lo=1),
        "momentum": lambda v: _is_real(v, lo=0, hi=1),
        # ext:
        "loss_kind": _one_of("cross_entropy", "mse"),
        "batch_size": lambda v: _is_int(v, lo=1),
        "learning_rate_init": lambda v: _is_real(v, lo=0, lo_open=True),
        "tol": lambda v: _is_real(v, lo=0),
        "n_iter_no_change": lambda v: _is_int(v, lo=1),
    },
    "GaussianNB": {
        "var_smoothing": lambda v: _is_real(v, lo=0),
        "priors": _is_priors,
    },
    "AdaBoost": {
        "n_estimators": lambda v: _is_int(v, lo=1),
        "learning_rate": lambda v: _is_real(v, lo=0, lo_open=True),
        # ext: weak-learner depth (stumps by default)
        "max_depth": lambda v: _is_int(v, lo=1),
    },
    "KNN": {
        "n_neighbors": lambda v: _is_int(v, lo=1),
        "weights": _one_of("uniform", "distance"),
        "algorithm": _one_of("auto", "ball_tree", "kd_tree", "brute"),  # hint only
        "leaf_size": lambda v: _is_int(v, lo=1),  # hint only
        "p": lambda v: _is_int(v, lo=1),
        "metric": _one_of("euclidean", "manhattan", "minkowski"),
        "n_jobs": lambda v: v is None or _is_int(v),  # hint only
    },
    "RandomForest": {
        "n_estimators": lambda v: _is_int(v, lo=1),
        "max_depth": _is_depth,
        "min_samples_split": lambda v: _is_int(v, lo=2),
        "min_samples_leaf": lambda v: _is_int(v, lo=1),
        "max_features": _one_of("auto", "sqrt", "log2", None),
        "bootstrap": lambda v: isinstance(v, bool),
        "criterion": _one_of("gini", "entropy"),
        "oob_score": lambda v: isinstance(v, bool),
        "random_state": lambda v: v is None or _is_int(v),
    },
    "SVM-linear": {
        "C": lambda v: _is_real(v, lo=0, lo_open=True),
        "kernel": _one_of("linear"),
        "tol": lambda v: _is_real(v, lo=0, lo_open=True),
        "class_weight": _one_of(None, "balanced"),
        "random_state": lambda v: v is None or _is_int(v),  # solver is deterministic
        "max_iter": lambda v: _is_int(v, lo=-1),
    },
    "SVM-sigmoid": {
        "kernel": _one_of("sigmoid"),
        "C": lambda v: _is_real(v, lo=0, lo_open=True),
        "gamma": lambda v: v in ("scale", "auto") or _is_real(v, lo=0, lo_open=True),
        "coef0": _is_real,
        "tol": lambda v: _is_real(v, lo=0, lo_open=True),
        "class_weight": _one_of(None, "balanced"),
        "shrinking": lambda v: isinstance(v, bool),  # hint only
        "probability": lambda v: isinstance(v, bool),  # hint only
        "cache_size": lambda v: _is_real(v, lo=0, lo_open=True),  # hint only
        "random_state": lambda v: v is None or _is_int(v),
        "max_iter": lambda v: _is_int(v, lo=-1),
    },
    "SVM-RBF": {
        "C": lambda v: _is_real(v, lo=0, lo_open=True),
        "gamma": lambda v: v in ("scale", "auto") or _is_real(v, lo=0, lo_open=True),
        "kernel": _one_of("rbf"),
        "class_weight": _one_of(None, "balanced"),
        "shrinking": lambda v: isinstance(v, bool),
        "probability": lambda v: isinstance(v, bool),
        "tol": lambda v: _is_real(v, lo=0, lo_open=True),
        "cache_size": lambda v: _is_real(v, lo=0, lo_open=True),
        "max_iter": lambda v: _is_int(v, lo=-1),
        "random_state": lambda v: v is None or _is_int(v),
    },
}

# Parameters that cannot change fitted behaviour; grid evaluation may share
# one fit across configs differing only in these.
HINT_PARAMS: dict[str, set] = {
    "KNN": {"algorithm", "leaf_size", "n_jobs"},
    "SVM-linear": {"random_state"},
    "SVM-sigmoid": {"shrinking", "probability", "cache_size", "random_state"},
    "SVM-RBF": {"shrinking", "probability", "cache_size", "random_state"},
    "RandomForest": {"oob_score"},
    "MLP": set(),  # momentum handled specially (sgd only)
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def validate(self) -> "ClassifierSpec":
        if self.kind not in KINDS:
            raise UnknownKind(f"unknown classifier kind {self.kind!r}")
        vocab = _VOCAB[self.kind]
        for key, value in self.params.items():
            if key not in vocab:
                raise ParamOutOfRange(f"{self.kind}: unknown parameter {key!r}")
            if not vocab[key](value):
                raise ParamOutOfRange(f"{self.kind}: {key}={value!r} out of range")
        return self

    def effective_params(self) -> tuple:
        """Canonical key of the parameters that can affect the fitted model."""
        drop = set(HINT_PARAMS.get(self.kind, set()))
        items = {k: v for k, v in self.params.items() if k not in drop}
        if self.kind == "MLP" and items.get("solver", "adam") != "sgd":
            items.pop("momentum", None)
        if self.kind == "KNN":
            resolved = _knn.resolve_metric(items.pop("metric", "euclidean"), items.pop("p", 2))
            items["metric"] = "/".join(str(t) for t in resolved)
        return (self.kind,) + tuple(sorted((k, _freeze(v)) for k, v in items.items()))


def _freeze(v):
    if isinstance(v, (list, tuple)):
        return tuple(_freeze(x) for x in v)
    return v


@dataclass
class TrainedModel:
    spec: ClassifierSpec
    inner: object
    n_classes: int

    def predict_array(self, X: np.ndarray) -> np.ndarray:
        return self.inner.predict(np.asarray(X, dtype=np.float64))


def fit(spec: ClassifierSpec, train: LabeledDataset) -> TrainedModel:
    """Validate the spec and dispatch to the kind-specific trainer."""
    return fit_arrays(spec, train.features.values, train.labels, train.n_classes)


def fit_arrays(spec: ClassifierSpec, X, y, n_classes: int) -> TrainedModel:
    """Like :func:`fit` but on bare arrays (used by cross-validation folds,
    which may not contain every class)."""
    spec.validate()
    if n_classes < 2:
        raise SingleClass("training data must contain at least 2 classes")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    k = n_classes
    p = spec.params
    if spec.kind == "MLP":
        inner = _mlp.train_mlp(X, y, k, p, spec.seed)
    elif spec.kind == "GBDT":
        inner = _gbdt.gbdt_fit(X, y, k, p, spec.seed)
    elif spec.kind == "GaussianNB":
        inner = _gnb.gnb_fit(X, y, k, p)
    elif spec.kind == "AdaBoost":
        inner = _ada.adaboost_fit(X, y, k, p, spec.seed)
    elif spec.kind == "KNN":
        inner = _knn.knn_fit(X, y, k, p)
    elif spec.kind == "RandomForest":
        inner = _forest.rf_fit(X, y, k, p, spec.seed)
    elif spec.kind == "SVM-linear":
        inner = _svm.svm_fit(X, y, k, p, "linear")
    elif spec.kind == "SVM-sigmoid":
        inner = _svm.svm_fit(X, y, k, p, "sigmoid")
    else:  # SVM-RBF, kind already validated
        inner = _svm.svm_fit(X, y, k, p, "rbf")
    return TrainedModel(spec=spec, inner=inner, n_classes=k)


def predict(model: TrainedModel, fm) -> np.ndarray:
    """Labels for a FeatureMatrix (or a bare 2-D array)."""
    X = fm.values if isinstance(fm, FeatureMatrix) else np.asarray(fm, dtype=np.float64)
    return model.predict_array(X)


# --- JSON serialization -----------------------------------------------------


def _arr(a):
    return np.asarray(a).tolist()


def _model_payload(model: TrainedModel) -> dict:
    inner = model.inner
    kind = model.spec.kind
    if kind == "MLP":
        return {
            "weights": [_arr(w) for w in inner.weights],
            "biases": [_arr(b) for b in inner.biases],
            "activation": inner.activation,
            "loss_kind": inner.loss_kind,
            "n_classes": inner.n_classes,
        }
    if kind == "GBDT":
        return {
            "n_classes": inner.n_classes,
            "boosters": [
                {
                    "base_score": bst.base_score,
                    "learning_rate": bst.learning_rate,
                    "trees": [t.to_dict() for t in bst.trees],
                }
                for bst in inner.boosters
            ],
        }
    if kind == "GaussianNB":
        return {
            "priors": _arr(inner.priors),
            "means": _arr(inner.means),
            "variances": _arr(inner.variances),
            "var_smoothing": inner.var_smoothing,
        }
    if kind == "AdaBoost":
        return {
            "alphas": list(inner.alphas),
            "n_classes": inner.n_classes,
            "learners": [t.to_dict() for t in inner.learners],
        }
    if kind == "KNN":
        return {
            "train_X": _arr(inner.train_X),
            "train_y": _arr(inner.train_y),
            "n_classes": inner.n_classes,
            "k": inner.k,
            "metric": inner.metric,
            "p": inner.p,
            "weights": inner.weights,
        }
    if kind == "RandomForest":
        return {
            "n_classes": inner.n_classes,
            "bootstrap": inner.bootstrap,
            "criterion": inner.criterion,
            "oob_score": inner.oob_score,
            "trees": [t.to_dict() for t in inner.trees],
        }
    # SVM-*
    return {
        "kernel": inner.kernel,
        "gamma": inner.gamma,
        "coef0": inner.coef0,
        "C": inner.C,
        "classes": inner.classes,
        "machines": [
            {
                "support_X": _arr(m.support_X),
                "support_y": _arr(m.support_y),
                "alpha": _arr(m.alpha),
                "b": m.b,
            }
            for m in inner.machines
        ],
    }


def _model_from_payload(kind: str, d: dict):
    if kind == "MLP":
        return _mlp.MlpModel(
            weights=[np.array(w, dtype=np.float64) for w in d["weights"]],
            biases=[np.array(b, dtype=np.float64) for b in d["biases"]],
            activation=d["activation"],
            loss_kind=d["loss_kind"],
            n_classes=d["n_classes"],
        )
    if kind == "GBDT":
        boosters = [
            _gbdt._Booster(
                base_score=b["base_score"],
                learning_rate=b["learning_rate"],
                trees=[Tree.from_dict(t, regression=True) for t in b["trees"]],
            )
            for b in d["boosters"]
        ]
        return _gbdt.GbdtModel(boosters=boosters, n_classes=d["n_classes"])
    if kind == "GaussianNB":
        return _gnb.GnbModel(
            priors=np.array(d["priors"], dtype=np.float64),
            means=np.array(d["means"], dtype=np.float64),
            variances=np.array(d["variances"], dtype=np.float64),
            var_smoothing=d["var_smoothing"],
        )
    if kind == "AdaBoost":
        return _ada.AdaModel(
            learners=[Tree.from_dict(t, regression=False) for t in d["learners"]],
            alphas=list(d["alphas"]),
            n_classes=d["n_classes"],
        )
    if kind == "KNN":
        return _knn.KnnModel(
            train_X=np.array(d["train_X"], dtype=np.float64),
            train_y=np.array(d["train_y"], dtype=np.int64),
            n_classes=d["n_classes"],
            k=d["k"],
            metric=d["metric"],
            p=d["p"],
            weights=d["weights"],
        )
    if kind == "RandomForest":
        return _forest.RfModel(
            trees=[Tree.from_dict(t, regression=False) for t in d["trees"]],
            n_classes=d["n_classes"],
            bootstrap=d["bootstrap"],
            criterion=d["criterion"],
            oob_score=d["oob_score"],
        )
    machines = [
        _svm._BinaryMachine(
            support_X=np.array(m["support_X"], dtype=np.float64).reshape(len(m["alpha"]), -1)
            if len(m["alpha"])
            else np.zeros((0, 0)),
            support_y=np.array(m["support_y"], dtype=np.float64),
            alpha=np.array(m["alpha"], dtype=np.float64),
            b=m["b"],
        )
        for m in d["machines"]
    ]
    return _svm.SvmModel(
        machines=machines,
        classes=list(d["classes"]),
        kernel=d["kernel"],
        gamma=d["gamma"],
        coef0=d["coef0"],
        C=d["C"],
    )


def model_to_json(model: TrainedModel) -> str:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.spec.kind,
        "params": _jsonable_params(model.spec.params),
        "seed": model.spec.seed,
        "n_classes": model.n_classes,
        "payload": _model_payload(model),
    }
    return json.dumps(doc, sort_keys=True)


def _jsonable_params(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {doc.get('format_version')!r}")
    params = {
        k: tuple(v) if k == "hidden_layer_sizes" else v for k, v in doc["params"].items()
    }
    spec = ClassifierSpec(kind=doc["kind"], params=params, seed=doc["seed"])
    inner = _model_from_payload(doc["kind"], doc["payload"])
    return TrainedModel(spec=spec, inner=inner, n_classes=doc["n_classes"])


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(model_to_json(model) + "\n")


def load_model(path) -> TrainedModel:
    return model_from_json(Path(path).read_text())
