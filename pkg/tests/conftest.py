import numpy as np
import pytest

from fusepipe.featureio import FeatureMatrix, LabeledDataset


def make_blobs(n_per_class=60, d=6, gap=4.0, seed=0, tag="blobs"):
    """Two spherical Gaussian classes whose means sit `gap` apart along the
    all-ones direction (unit per-feature std)."""
    rng = np.random.default_rng(seed)
    shift = gap / np.sqrt(d)
    X0 = rng.normal(0.0, 1.0, (n_per_class, d))
    X1 = rng.normal(0.0, 1.0, (n_per_class, d)) + shift
    X = np.vstack([X0, X1])
    y = np.array([0] * n_per_class + [1] * n_per_class)
    ids = [f"s{i:04d}" for i in range(2 * n_per_class)]
    return LabeledDataset(FeatureMatrix(ids, tag, X), y, ["neg", "pos"])


def make_margin_blobs(n_per_class=100, d=2, margin=4.0, seed=0, tag="margin"):
    """Linearly separable classes with a hard gap of `margin` (in units of
    the within-class std) along the first axis."""
    rng = np.random.default_rng(seed)
    X0 = rng.normal(0.0, 1.0, (n_per_class, d))
    X0[:, 0] = -np.abs(X0[:, 0]) - margin / 2.0
    X1 = rng.normal(0.0, 1.0, (n_per_class, d))
    X1[:, 0] = np.abs(X1[:, 0]) + margin / 2.0
    X = np.vstack([X0, X1])
    y = np.array([0] * n_per_class + [1] * n_per_class)
    ids = [f"m{i:04d}" for i in range(2 * n_per_class)]
    return LabeledDataset(FeatureMatrix(ids, tag, X), y, ["neg", "pos"])


@pytest.fixture
def blobs():
    return make_blobs()


@pytest.fixture
def margin_blobs():
    return make_margin_blobs()
