import numpy as np

from fusepipe.classifiers._tree import grow_classification_tree
from fusepipe.classifiers.forest import rf_fit, rf_predict
from fusepipe.rng import derive_seed


# --- independent oracle: plain-Python exhaustive-split decision tree ----------


def gini_of(labels, n_classes):
    n = len(labels)
    if n == 0:
        return 0.0
    counts = [0] * n_classes
    for c in labels:
        counts[c] += 1
    return 1.0 - sum((ci / n) ** 2 for ci in counts)


EPS = 1e-10  # same tie tolerance the production splitter documents


def oracle_best_split(X, y, n_classes, min_samples_leaf=1):
    """Exhaustive scan over every feature and midpoint threshold; costs
    within EPS tie and the first candidate in (feature, threshold) order
    wins."""
    n, d = X.shape
    best = None
    for f in range(d):
        vals = sorted(set(X[:, f]))
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = (lo + hi) / 2.0
            if thr >= hi:
                thr = lo
            left = [i for i in range(n) if X[i, f] <= thr]
            right = [i for i in range(n) if X[i, f] > thr]
            if len(left) < min_samples_leaf or len(right) < min_samples_leaf:
                continue
            cost = (
                len(left) * gini_of([y[i] for i in left], n_classes)
                + len(right) * gini_of([y[i] for i in right], n_classes)
            ) / n
            if best is None or cost < best[0] - EPS:
                best = (cost, f, thr)
    return best


class OracleTree:
    def __init__(self, X, y, n_classes):
        self.n_classes = n_classes
        self.root = self._grow(X, y)

    def _grow(self, X, y):
        counts = np.bincount(y, minlength=self.n_classes)
        node = {"label": int(np.argmax(counts))}
        if gini_of(list(y), self.n_classes) <= 0.0 or len(y) < 2:
            return node
        found = oracle_best_split(X, y, self.n_classes)
        if found is None:
            return node
        cost, f, thr = found
        if not cost < gini_of(list(y), self.n_classes) - EPS:
            return node
        mask = X[:, f] <= thr
        node.update(
            feature=f,
            threshold=thr,
            left=self._grow(X[mask], y[mask]),
            right=self._grow(X[~mask], y[~mask]),
        )
        return node

    def predict_one(self, x):
        node = self.root
        while "feature" in node:
            node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
        return node["label"]

    def predict(self, X):
        return np.array([self.predict_one(x) for x in X])


def _random_problem(seed, n=20, d=4, n_classes=2):
    rng = np.random.default_rng(seed)
    X = np.round(rng.normal(size=(n, d)), 2)
    y = rng.integers(0, n_classes, n)
    return X, y


def test_root_split_matches_exhaustive_search():
    for seed in range(8):
        X, y = _random_problem(seed)
        if len(np.unique(y)) < 2:
            continue
        tree = grow_classification_tree(X, y, 2, max_features=None, max_depth=1)
        want = oracle_best_split(X, y, 2)
        if want is None or not want[0] < gini_of(list(y), 2) - EPS:
            assert tree.feature[0] == -1
        else:
            assert tree.feature[0] == want[1]
            assert tree.threshold[0] == want[2]


def test_single_tree_full_depth_memorises_training_set():
    X, y = _random_problem(3, n=30, d=5)
    model = rf_fit(X, y, 2, {"n_estimators": 1, "bootstrap": False, "max_features": None}, seed=0)
    assert np.array_equal(model.predict(X), y)


def test_single_tree_matches_oracle_tree_exactly():
    for seed in range(6):
        X, y = _random_problem(seed + 100, n=24, d=3)
        if len(np.unique(y)) < 2:
            continue
        model = rf_fit(
            X, y, 2, {"n_estimators": 1, "bootstrap": False, "max_features": None}, seed=0
        )
        oracle = OracleTree(X, y, 2)
        queries = np.round(np.random.default_rng(seed).normal(size=(50, 3)), 2)
        assert np.array_equal(model.predict(queries), oracle.predict(queries))


def test_gini_definition_values():
    assert gini_of([1, 1, 1, 1], 2) == 0.0
    assert gini_of([0, 0, 1, 1], 2) == 0.5


def test_capped_growth_equals_truncated_uncapped():
    # per-node seeding makes a depth cap equivalent to post-hoc truncation
    X, y = _random_problem(42, n=60, d=6, n_classes=3)
    seed = derive_seed(9, "tree", 0)
    for cap in (1, 2, 3):
        capped = grow_classification_tree(
            X, y, 3, max_depth=cap, max_features=2, tree_seed=seed
        )
        full = grow_classification_tree(
            X, y, 3, max_depth=None, max_features=2, tree_seed=seed
        )
        queries = np.random.default_rng(1).normal(size=(80, 6))
        assert np.array_equal(capped.apply(queries), full.apply(queries, depth_cap=cap))


def test_forest_prediction_tie_goes_to_smaller_class():
    # two trees voting differently: argmax picks the smaller class index
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 1, 0, 1])
    model = rf_fit(X, y, 2, {"n_estimators": 2, "bootstrap": True}, seed=5)
    votes = model.vote_matrix(np.array([[1.5]]))
    if votes[0, 0] == votes[0, 1]:
        assert model.predict(np.array([[1.5]]))[0] == 0


def test_bootstrap_and_seed_determinism():
    X, y = _random_problem(7, n=40, d=4)
    kwargs = {"n_estimators": 12, "bootstrap": True, "max_features": "sqrt"}
    a = rf_fit(X, y, 2, kwargs, seed=123)
    b = rf_fit(X, y, 2, kwargs, seed=123)
    queries = np.random.default_rng(2).normal(size=(30, 4))
    assert np.array_equal(a.predict(queries), b.predict(queries))
    c = rf_fit(X, y, 2, kwargs, seed=124)
    assert any(
        not np.array_equal(ta.apply(queries), tc.apply(queries))
        for ta, tc in zip(a.trees, c.trees)
    )


def test_oob_score_computed_when_asked():
    X, y = _random_problem(11, n=50, d=4)
    model = rf_fit(
        X, y, 2, {"n_estimators": 30, "bootstrap": True, "oob_score": True}, seed=3
    )
    assert model.oob_score is not None
    assert 0.0 <= model.oob_score <= 1.0


def test_entropy_criterion_works():
    X, y = _random_problem(13, n=30, d=4)
    model = rf_fit(
        X, y, 2,
        {"n_estimators": 5, "bootstrap": False, "criterion": "entropy", "max_features": None},
        seed=0,
    )
    assert np.array_equal(model.predict(X), y)
