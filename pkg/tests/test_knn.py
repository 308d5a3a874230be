import numpy as np

from fusepipe.classifiers.knn import KnnModel, knn_fit, knn_predict


def knn_oracle(train_X, train_y, x, k, n_classes, metric="euclidean", p=2):
    """Plain-Python exhaustive scan with the documented tie rules."""
    dists = []
    for i, row in enumerate(train_X):
        diff = [abs(a - b) for a, b in zip(row, x)]
        if metric == "euclidean" or (metric == "minkowski" and p == 2):
            d = sum(v * v for v in diff) ** 0.5
        elif metric == "manhattan" or (metric == "minkowski" and p == 1):
            d = sum(diff)
        else:
            d = sum(v**p for v in diff) ** (1.0 / p)
        dists.append((d, i))
    dists.sort()  # distance, then lower train index
    neigh = [train_y[i] for _, i in dists[:k]]
    counts = [0] * n_classes
    for c in neigh:
        counts[c] += 1
    best = max(counts)
    tied = {c for c in range(n_classes) if counts[c] == best}
    if len(tied) == 1:
        return tied.pop()
    for c in neigh:  # earliest tied class in neighbour order
        if c in tied:
            return c
    raise AssertionError


def test_k1_returns_exact_match_label():
    X = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 0.0]])
    y = np.array([0, 1, 0])
    model = knn_fit(X, y, 2, {"n_neighbors": 1})
    assert knn_predict(model, [5.0, 5.0]) == 1
    assert knn_predict(model, [0.0, 0.0]) == 0


def test_hand_placed_points_match_oracle():
    X = np.array([[0, 0], [1, 0], [0, 1], [5, 5], [6, 5], [5, 6]], dtype=float)
    y = np.array([0, 0, 0, 1, 1, 1])
    model = knn_fit(X, y, 2, {"n_neighbors": 3})
    for q in ([0.4, 0.4], [5.2, 5.2], [2.5, 2.5], [3.0, 2.0]):
        got = knn_predict(model, q)
        want = knn_oracle(X, y, q, 3, 2)
        assert got == want


def test_duplicate_points_tie_broken_by_lower_index():
    # two training points at identical distance; the stable sort must prefer
    # the lower index, which carries label 1
    X = np.array([[1.0, 0.0], [1.0, 0.0], [9.0, 9.0]])
    y = np.array([1, 0, 0])
    model = knn_fit(X, y, 2, {"n_neighbors": 1})
    assert knn_predict(model, [1.0, 0.0]) == 1


def test_vote_tie_goes_to_nearest_neighbor_class():
    # k=2, one neighbour each: nearest wins
    X = np.array([[0.0, 0.0], [2.0, 0.0]])
    y = np.array([1, 0])
    model = knn_fit(X, y, 2, {"n_neighbors": 2})
    assert knn_predict(model, [0.5, 0.0]) == 1
    assert knn_predict(model, [1.6, 0.0]) == 0


def test_matches_oracle_on_random_datasets_all_metrics():
    rng = np.random.default_rng(0)
    for trial in range(10):
        n = int(rng.integers(8, 40))
        d = int(rng.integers(2, 6))
        n_classes = int(rng.integers(2, 4))
        X = np.round(rng.normal(size=(n, d)), 3)  # rounding provokes distance ties
        y = rng.integers(0, n_classes, n)
        if len(np.unique(y)) < n_classes:
            continue
        q = np.round(rng.normal(size=d), 3)
        for metric, p in (("euclidean", 2), ("manhattan", 2), ("minkowski", 1), ("minkowski", 2)):
            for k in (1, 3, min(7, n)):
                model = knn_fit(X, y, n_classes, {"n_neighbors": k, "metric": metric, "p": p})
                assert knn_predict(model, q) == knn_oracle(X, y, q, k, n_classes, metric, p)


def test_distance_weighted_votes():
    X = np.array([[0.0], [0.9], [1.1]])
    y = np.array([0, 1, 1])
    # query nearer the single 0 than the two 1s: uniform k=3 picks 1,
    # distance weighting flips to 0 when the hit is exact
    model_u = knn_fit(X, y, 2, {"n_neighbors": 3, "weights": "uniform"})
    model_d = knn_fit(X, y, 2, {"n_neighbors": 3, "weights": "distance"})
    assert knn_predict(model_u, [0.0]) == 1
    assert knn_predict(model_d, [0.0]) == 0  # zero distance dominates
