import math

import numpy as np

from fusepipe.classifiers.gnb import GnbModel, gnb_fit, gnb_predict


def closed_form_posteriors(x, priors, means, variances):
    """Hand evaluation of prior times product of Gaussian densities."""
    joint = []
    for c in range(len(priors)):
        p = priors[c]
        for j in range(len(x)):
            mu, var = means[c][j], variances[c][j]
            p *= math.exp(-((x[j] - mu) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
        joint.append(p)
    total = sum(joint)
    return [v / total for v in joint]


def test_one_dimensional_example():
    # class0 {0, 2}, class1 {10, 12}: equal priors and variances, so x=5 goes
    # to the nearer mean (|5-1| < |5-11|)
    X = np.array([[0.0], [2.0], [10.0], [12.0]])
    y = np.array([0, 0, 1, 1])
    model = gnb_fit(X, y, 2, {"priors": [0.5, 0.5]})
    label, post = gnb_predict(model, [5.0])
    assert label == 0
    assert post[0] > post[1]


def test_class_mean_is_classified_to_that_class():
    X = np.array([[0.0, 0.0], [2.0, 2.0], [10.0, 10.0], [12.0, 12.0]])
    y = np.array([0, 0, 1, 1])
    model = gnb_fit(X, y, 2, {"priors": [0.5, 0.5]})
    assert gnb_predict(model, [1.0, 1.0])[0] == 0
    assert gnb_predict(model, [11.0, 11.0])[0] == 1


def test_posteriors_sum_to_one():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 4))
    y = rng.integers(0, 3, 30)
    model = gnb_fit(X, y, 3, {})
    post = model.posteriors(rng.normal(size=(20, 4)))
    assert np.all(np.abs(post.sum(axis=1) - 1.0) < 1e-12)


def test_posteriors_match_closed_form_hand_computation():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(0, 1, (12, 3)), rng.normal(3, 2, (15, 3))])
    y = np.array([0] * 12 + [1] * 15)
    model = gnb_fit(X, y, 2, {"var_smoothing": 1e-9})
    for _ in range(20):
        x = rng.normal(1.5, 2.0, 3)
        _, post = gnb_predict(model, x)
        want = closed_form_posteriors(
            x, model.priors.tolist(), model.means.tolist(), model.variances.tolist()
        )
        assert np.all(np.abs(post - np.array(want)) < 1e-9)


def test_variance_smoothing_uses_largest_feature_variance():
    X = np.array([[0.0, 0.0], [0.0, 100.0], [1.0, 0.0], [1.0, 100.0]])
    y = np.array([0, 0, 1, 1])
    smoothing = 1e-3
    model = gnb_fit(X, y, 2, {"var_smoothing": smoothing})
    global_max_var = X.var(axis=0).max()
    # first feature is constant within each class: variance is exactly the add-on
    assert np.allclose(model.variances[:, 0], smoothing * global_max_var)


def test_argmax_invariant_under_prior_scaling():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 2, 40)
    model = gnb_fit(X, y, 2, {})
    queries = rng.normal(size=(25, 3))
    base = model.predict(queries)
    # scaling all priors by a positive constant shifts every joint
    # log-likelihood by the same amount
    scaled = GnbModel(
        priors=model.priors * 7.3,
        means=model.means,
        variances=model.variances,
        var_smoothing=model.var_smoothing,
    )
    assert np.array_equal(scaled.predict(queries), base)


def test_empirical_priors_from_counts():
    X = np.vstack([np.zeros((6, 1)), np.ones((2, 1))])
    y = np.array([0] * 6 + [1] * 2)
    model = gnb_fit(X, y, 2, {})
    assert np.allclose(model.priors, [0.75, 0.25])
