"""Seeded k-means: determinism, assignment optimality, inertia
accounting, and the membership-matrix export."""

import numpy as np
import pytest

from musebench.cluster import ClusterModel, kmeans, predict, to_membership
from musebench.errors import ValidationFailure


def blobs(rng, n_blobs=3, per=20, dim=4, spread=0.3):
    centers = rng.normal(scale=5.0, size=(n_blobs, dim))
    chunks = [c + rng.normal(scale=spread, size=(per, dim)) for c in centers]
    return np.concatenate(chunks, axis=0)


def nearest_sq_dist(X, centroids):
    d = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return d.argmin(axis=1), d.min(axis=1)


class TestDeterminism:
    def test_same_seed_bitwise_identical(self):
        rng = np.random.default_rng(5)
        X = blobs(rng)
        a = kmeans(X, 3, seed=11)
        b = kmeans(X, 3, seed=11)
        assert np.array_equal(a.centroids, b.centroids)
        assert np.array_equal(a.labels, b.labels)
        assert a.inertia == b.inertia
        assert a.n_iter == b.n_iter

    def test_different_seed_may_differ_but_stays_valid(self):
        rng = np.random.default_rng(6)
        X = blobs(rng, spread=2.0)
        for seed in range(5):
            m = kmeans(X, 4, seed=seed)
            assert m.labels.shape == (X.shape[0],)
            assert set(np.unique(m.labels)) <= set(range(4))


class TestAssignments:
    def test_labels_are_argmin_of_final_centroids(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            X = blobs(rng, n_blobs=int(rng.integers(2, 5)))
            k = int(rng.integers(2, 6))
            m = kmeans(X, k, seed=trial)
            want_labels, want_d = nearest_sq_dist(X, m.centroids)
            assert np.array_equal(m.labels, want_labels)
            np.testing.assert_allclose(m.inertia, want_d.sum(), rtol=1e-12)

    def test_inertia_consistent_after_iteration_cap(self):
        rng = np.random.default_rng(8)
        X = blobs(rng, spread=3.0)
        m = kmeans(X, 5, seed=3, max_iters=1)
        assert m.n_iter == 1
        _, want_d = nearest_sq_dist(X, m.centroids)
        np.testing.assert_allclose(m.inertia, want_d.sum(), rtol=1e-12)

    def test_inertia_history_never_increases(self):
        rng = np.random.default_rng(9)
        for trial in range(10):
            X = blobs(rng)
            m = kmeans(X, 4, seed=trial)
            hist = m.inertia_history
            assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))

    def test_every_cluster_nonempty(self):
        # duplicate-heavy data provokes empty clusters during Lloyd steps
        rng = np.random.default_rng(10)
        X = np.repeat(rng.normal(size=(4, 3)), 10, axis=0)
        X += rng.normal(scale=1e-6, size=X.shape)
        m = kmeans(X, 4, seed=0)
        assert set(np.unique(m.labels)) == set(range(4))


class TestValidation:
    def test_k_exceeding_distinct_vectors(self):
        X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(ValidationFailure, match="distinct"):
            kmeans(X, 3)

    def test_bad_shapes_and_values(self):
        with pytest.raises(ValidationFailure):
            kmeans(np.empty((0, 3)), 2)
        with pytest.raises(ValidationFailure):
            kmeans(np.array([1.0, 2.0]), 1)
        with pytest.raises(ValidationFailure):
            kmeans(np.array([[np.nan, 0.0]]), 1)
        with pytest.raises(ValidationFailure):
            kmeans(np.array([[1.0, 2.0]]), 0)


class TestPredict:
    def test_matches_training_labels(self):
        rng = np.random.default_rng(12)
        X = blobs(rng)
        m = kmeans(X, 3, seed=1)
        assert np.array_equal(predict(m, X), m.labels)

    def test_feature_count_checked(self):
        rng = np.random.default_rng(13)
        m = kmeans(blobs(rng, dim=4), 2, seed=0)
        with pytest.raises(ValidationFailure):
            predict(m, np.zeros((3, 5)))


class TestExports:
    def test_membership_is_one_hot(self):
        rng = np.random.default_rng(14)
        X = blobs(rng)
        m = kmeans(X, 3, seed=2)
        dim = to_membership(m)
        assert dim.name == "embedding"
        assert dim.categories == ("cluster-0", "cluster-1", "cluster-2")
        assert dim.matrix.shape == (3, X.shape[0])
        np.testing.assert_array_equal(dim.matrix.sum(axis=0), np.ones(X.shape[0]))
        for j, lab in enumerate(m.labels):
            assert dim.matrix[lab, j] == 1

    def test_json_round_trip(self):
        rng = np.random.default_rng(15)
        m = kmeans(blobs(rng), 3, seed=4)
        back = ClusterModel.from_json_dict(m.to_json_dict())
        np.testing.assert_array_equal(back.centroids, m.centroids)
        np.testing.assert_array_equal(back.labels, m.labels)
        assert back.inertia == m.inertia
        assert back.seed == m.seed

    def test_bad_json_rejected(self):
        with pytest.raises(ValidationFailure):
            ClusterModel.from_json_dict({"k": 2})
