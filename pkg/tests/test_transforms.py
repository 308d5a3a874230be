import numpy as np
import pytest

from fusepipe.errors import RankDeficient, TooFewMinority
from fusepipe.featureio import FeatureMatrix, LabeledDataset
from fusepipe.transforms import (
    FittedVariant,
    PCAModel,
    ScalerParams,
    SmoteConfig,
    apply_scaler,
    fit_pca,
    fit_scaler,
    fit_variant,
    pca_transform,
    smote,
)


def _fm(values, tag="t"):
    values = np.asarray(values, dtype=np.float64)
    return FeatureMatrix([f"s{i}" for i in range(values.shape[0])], tag, values)


class TestScaler:
    def test_two_point_column(self):
        fm = _fm([[1.0], [3.0]])
        params = fit_scaler(fm)
        assert params.mean[0] == 2.0 and params.std[0] == 1.0
        out = apply_scaler(fm, params)
        assert np.allclose(out.values[:, 0], [-1.0, 1.0])

    def test_constant_column_passes_through_centered(self):
        fm = _fm([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
        out = apply_scaler(fm, fit_scaler(fm))
        assert np.array_equal(out.values[:, 0], [0.0, 0.0, 0.0])

    def test_fit_set_is_standardised(self):
        rng = np.random.default_rng(7)
        fm = _fm(rng.normal(3.0, 2.5, (10, 3)))
        out = apply_scaler(fm, fit_scaler(fm))
        assert np.all(np.abs(out.values.mean(axis=0)) < 1e-12)
        assert np.all(np.abs(out.values.std(axis=0) - 1.0) < 1e-9)


class TestPca:
    def test_axis_aligned_two_points(self):
        fm = _fm([[-1.0, 0.0], [1.0, 0.0]])
        model = fit_pca(fm, 1)
        assert np.allclose(model.components[0], [1.0, 0.0])
        assert np.isclose(model.eigenvalues[0], 1.0)

    def test_isotropic_cloud_needs_both_components(self):
        # exactly isotropic by construction: equal eigenvalues
        pts = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        model = fit_pca(_fm(pts), 0.95)
        assert model.k == 2

    def test_components_orthonormal(self):
        rng = np.random.default_rng(3)
        fm = _fm(rng.normal(size=(40, 8)) @ np.diag([5, 4, 3, 2, 1, 0.5, 0.2, 0.1]))
        model = fit_pca(fm, 8)
        gram = model.components @ model.components.T
        assert np.max(np.abs(gram - np.eye(model.k))) < 1e-8
        assert np.all(np.diff(model.eigenvalues) <= 1e-12)
        assert model.explained_variance_ratio.sum() <= 1.0 + 1e-12

    def test_reconstruction_error_equals_discarded_eigenvalue_mass(self):
        rng = np.random.default_rng(5)
        fm = _fm(rng.normal(size=(30, 6)) * np.array([3.0, 2.5, 2.0, 1.0, 0.5, 0.25]))
        n = fm.n
        full = fit_pca(fm, 6)
        for k in (1, 2, 4):
            model = fit_pca(fm, k)
            proj = pca_transform(fm, model)
            recon = proj.values @ model.components + model.mean
            err = np.sum((fm.values - recon) ** 2)
            discarded = full.eigenvalues[k:].sum() * n
            assert abs(err - discarded) < 1e-6

    def test_sign_convention(self):
        rng = np.random.default_rng(11)
        fm = _fm(rng.normal(size=(25, 5)))
        model = fit_pca(fm, 3)
        for comp in model.components:
            assert comp[np.argmax(np.abs(comp))] > 0

    def test_rank_deficient_request_rejected(self):
        fm = _fm([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])  # rank 1
        with pytest.raises(RankDeficient):
            fit_pca(fm, 2)

    def test_json_round_trip(self):
        rng = np.random.default_rng(2)
        fm = _fm(rng.normal(size=(20, 4)))
        model = fit_pca(fm, 2)
        back = PCAModel.from_dict(model.to_dict())
        assert np.array_equal(back.components, model.components)
        assert np.array_equal(back.mean, model.mean)


def _imbalanced(n_maj=10, n_min=4, d=2, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n_maj, d)), rng.normal(5, 1, (n_min, d))])
    y = np.array([0] * n_maj + [1] * n_min)
    return LabeledDataset(_fm(X), y, ["maj", "min"])


class TestSmote:
    def test_balanced_dataset_unchanged(self):
        ds = _imbalanced(6, 6)
        out = smote(ds, SmoteConfig(k_neighbors=3, seed=1))
        assert out is ds

    def test_balances_to_majority_count(self):
        ds = _imbalanced(10, 4)
        out = smote(ds, SmoteConfig(k_neighbors=3, seed=1))
        counts = out.class_counts()
        assert counts.tolist() == [10, 10]
        assert out.n == 20

    def test_synthetics_lie_on_minority_segments(self):
        # minority {(0,0),(1,1)}, k=1: synthetics on the connecting segment
        X = np.array([[5.0, -3.0], [6.0, -2.0], [7.0, -4.0], [0.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 0, 0, 1, 1])
        ds = LabeledDataset(_fm(X), y, ["maj", "min"])
        out = smote(ds, SmoteConfig(k_neighbors=1, seed=9))
        syn = out.features.values[5:]
        for p in syn:
            # residual from the segment between (0,0) and (1,1)
            assert abs(p[0] - p[1]) < 1e-9
            assert -1e-9 <= p[0] <= 1.0 + 1e-9

    def test_originals_unchanged_and_ids_prefixed(self):
        ds = _imbalanced(8, 3)
        out = smote(ds, SmoteConfig(seed=4))
        assert np.array_equal(out.features.values[: ds.n], ds.features.values)
        assert out.features.sample_ids[: ds.n] == ds.features.sample_ids
        assert all(s.startswith("syn:") for s in out.features.sample_ids[ds.n :])

    def test_convex_combination_of_same_class_originals(self):
        ds = _imbalanced(12, 5, d=3, seed=2)
        out = smote(ds, SmoteConfig(k_neighbors=3, seed=3))
        originals = ds.features.values[ds.labels == 1]
        for p in out.features.values[ds.n :]:
            # some pair (x_i, x_nn) with p = x_i + u (x_nn - x_i)
            found = False
            for i in range(len(originals)):
                for j in range(len(originals)):
                    if i == j:
                        continue
                    d_ij = originals[j] - originals[i]
                    denom = d_ij @ d_ij
                    if denom == 0:
                        continue
                    u = (p - originals[i]) @ d_ij / denom
                    if -1e-9 <= u <= 1 + 1e-9:
                        resid = np.linalg.norm(originals[i] + u * d_ij - p)
                        if resid < 1e-9:
                            found = True
                            break
                if found:
                    break
            assert found

    def test_too_few_minority(self):
        X = np.vstack([np.zeros((5, 2)), np.ones((1, 2))])
        y = np.array([0] * 5 + [1])
        ds = LabeledDataset(_fm(X), y, ["maj", "min"])
        with pytest.raises(TooFewMinority):
            smote(ds, SmoteConfig(seed=0))

    def test_deterministic(self):
        ds = _imbalanced(9, 4)
        a = smote(ds, SmoteConfig(seed=42))
        b = smote(ds, SmoteConfig(seed=42))
        assert np.array_equal(a.features.values, b.features.values)


class TestVariants:
    def test_variant_order_and_leak_freedom(self, blobs):
        fitted = fit_variant(blobs, "norm_pca_smote", pca_target=0.95, seed=1)
        train_out = fitted.apply_train(blobs)
        # test path has no oversampling and reuses the fitted transforms only
        test_fm = fitted.apply_test(blobs.features)
        assert test_fm.n == blobs.n
        assert train_out.features.dim == test_fm.dim

    def test_simple_variant_is_identity(self, blobs):
        fitted = fit_variant(blobs, "simple")
        out = fitted.apply_train(blobs)
        assert np.array_equal(out.features.values, blobs.features.values)

    def test_serialization_round_trip(self, blobs, tmp_path):
        fitted = fit_variant(blobs, "norm_pca", pca_target=3)
        path = tmp_path / "variant.json"
        fitted.save(path)
        back = FittedVariant.load(path)
        a = fitted.apply_test(blobs.features).values
        b = back.apply_test(blobs.features).values
        assert np.array_equal(a, b)
