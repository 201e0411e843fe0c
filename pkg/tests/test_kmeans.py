"""Lloyd's algorithm, assignment, SSE, and reproducibility."""

import numpy as np
import pytest

import facecluster as fc
from facecluster.kmeans import kmeans_from_dict, kmeans_to_dict


def enumerate_1d_two_cluster_sse(points):
    """All contiguous 2-partitions of sorted 1-D points (optimal clusters
    of 1-D data are contiguous)."""
    pts = np.sort(points)
    best = np.inf
    for cut in range(1, len(pts)):
        left, right = pts[:cut], pts[cut:]
        sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
        best = min(best, sse)
    return best


class TestKMeansFit:
    def test_two_pairs_on_a_line(self):
        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        model = fc.kmeans_fit(X, 2, seed=0, restarts=8)
        assert sorted(model.centroids.ravel().tolist()) == [0.5, 10.5]
        assert model.inertia == pytest.approx(1.0)
        assert model.inertia == pytest.approx(enumerate_1d_two_cluster_sse(X.ravel()))

    def test_k_equals_n_zero_sse(self):
        rng = np.random.default_rng(0)
        X = rng.normal(0, 1, size=(6, 3))
        model = fc.kmeans_fit(X, 6, seed=1, restarts=3)
        assert model.inertia == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(np.sort(model.centroids, axis=0), np.sort(X, axis=0))

    def test_k_one_is_the_mean(self):
        rng = np.random.default_rng(1)
        X = rng.normal(2, 3, size=(15, 4))
        model = fc.kmeans_fit(X, 1, seed=0, restarts=2)
        assert np.allclose(model.centroids[0], X.mean(axis=0))
        expected = ((X - X.mean(axis=0)) ** 2).sum()
        assert model.inertia == pytest.approx(expected)

    def test_k_larger_than_n_rejected(self):
        with pytest.raises(ValueError):
            fc.kmeans_fit(np.zeros((3, 2)), 4)

    def test_duplicate_rows_cannot_seed_k(self):
        X = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
        with pytest.raises(ValueError, match="distinct"):
            fc.kmeans_fit(X, 3)

    def test_restart_and_iteration_limits_validated(self):
        X = np.eye(3)
        with pytest.raises(ValueError):
            fc.kmeans_fit(X, 2, restarts=0)
        with pytest.raises(ValueError):
            fc.kmeans_fit(X, 2, max_iter=0)

    def test_sse_trace_nonincreasing(self):
        rng = np.random.default_rng(2)
        X = rng.normal(0, 1, size=(50, 3))
        model = fc.kmeans_fit(X, 4, seed=7, restarts=4)
        assert np.all(np.diff(model.sse_trace) <= 1e-9)

    def test_bit_for_bit_reproducible(self):
        rng = np.random.default_rng(3)
        X = rng.normal(0, 1, size=(40, 2))
        a = fc.kmeans_fit(X, 3, seed=5, restarts=6)
        b = fc.kmeans_fit(X, 3, seed=5, restarts=6)
        assert np.array_equal(a.centroids, b.centroids)
        assert a.inertia == b.inertia

    def test_labels_are_a_fixed_point(self):
        rng = np.random.default_rng(4)
        X = rng.normal(0, 1, size=(30, 2))
        model = fc.kmeans_fit(X, 3, seed=1, restarts=4)
        first = fc.assign_all(model, X)
        second = fc.assign_all(model, X)
        assert np.array_equal(first.labels, second.labels)
        # centroids equal the means of their assigned points
        for j in range(model.k):
            members = X[first.labels == j]
            assert np.allclose(model.centroids[j], members.mean(axis=0), atol=1e-9)


class TestAssign:
    def test_exact_centroid_distance_zero(self):
        model = fc.kmeans_fit(np.diag([1.0, 2.0, 3.0]), 3, seed=0, restarts=2)
        idx, dist = fc.assign(model, model.centroids[2].copy())
        assert idx == 2
        assert dist == 0.0

    def test_tie_breaks_to_lowest_index(self):
        model = fc.KMeansModel(
            k=2,
            centroids=np.array([[0.0], [2.0]]),
            inertia=0.0,
            iterations=1,
            seed=0,
            restarts=1,
        )
        idx, _ = fc.assign(model, np.array([1.0]))
        assert idx == 0

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(5)
        X = rng.normal(0, 1, size=(30, 4))
        model = fc.kmeans_fit(X, 5, seed=2, restarts=4)
        for _ in range(100):
            x = rng.normal(0, 1, size=4)
            idx, dist = fc.assign(model, x)
            brute = [((x - c) ** 2).sum() for c in model.centroids]
            assert idx == int(np.argmin(brute))
            assert dist == pytest.approx(min(brute))

    def test_dimension_mismatch_rejected(self):
        model = fc.kmeans_fit(np.eye(3), 2, seed=0)
        with pytest.raises(ValueError):
            fc.assign(model, np.zeros(5))


class TestSse:
    def test_points_at_centroids(self):
        X = np.array([[1.0], [2.0]])
        labels = np.array([0, 1])
        assert fc.sse(X, labels, X.copy()) == 0.0

    def test_hand_computed(self):
        X = np.array([[0.0], [1.0]])
        labels = np.array([0, 0])
        assert fc.sse(X, labels, np.array([[0.5]])) == pytest.approx(0.5)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fc.sse(np.zeros((3, 2)), np.zeros(2, dtype=int), np.zeros((1, 2)))


class TestSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        model = fc.kmeans_fit(rng.normal(0, 1, size=(20, 3)), 4, seed=9, restarts=3)
        path = tmp_path / "km.json"
        fc.save_kmeans(model, path)
        back = fc.load_kmeans(path)
        assert np.array_equal(back.centroids, model.centroids)
        assert back.inertia == model.inertia
        assert back.k == model.k and back.seed == model.seed

    def test_unknown_schema_rejected(self):
        doc = kmeans_to_dict(fc.kmeans_fit(np.eye(3), 2, seed=0))
        doc["schema_version"] = -1
        with pytest.raises(ValueError, match="schema_version"):
            kmeans_from_dict(doc)
