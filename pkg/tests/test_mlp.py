"""Network initialization, forward pass, training, and gradient checking."""

import numpy as np
import pytest

import facecluster as fc
from facecluster.errors import SplitError
from facecluster.mlp import (
    _forward_pass,
    cross_entropy,
    forward_batch,
    mlp_from_dict,
    mlp_to_dict,
    stratified_split,
)
from facecluster.synth import gaussian_blobs, separated_blob_centers


def nudged_model(shape, seed, x, delta=1e-3):
    """Push first-layer pre-activations away from the rectifier kink so the
    finite-difference comparison is taken on a smooth region."""
    model = fc.mlp_init(shape, seed=seed)
    _, pre = _forward_pass(model, x[None, :])
    z = pre[0][0]
    b0 = model.biases[0].copy()
    for j in range(len(z)):
        if abs(z[j]) < delta:
            b0[j] += delta * (1.0 if z[j] >= 0 else -1.0)
    return fc.MlpModel(model.layer_sizes, model.weights, (b0,) + model.biases[1:], model.seed)


class TestInit:
    def test_same_seed_identical(self):
        a = fc.mlp_init([5, 4, 3], seed=3)
        b = fc.mlp_init([5, 4, 3], seed=3)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_biases_zero(self):
        model = fc.mlp_init([6, 5, 2], seed=0)
        assert all(np.all(b == 0.0) for b in model.biases)

    def test_weights_within_glorot_bound(self):
        model = fc.mlp_init([30, 20, 10], seed=1)
        for w, (fan_in, fan_out) in zip(model.weights, [(30, 20), (20, 10)]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            assert np.abs(w).max() <= bound

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            fc.mlp_init([5], seed=0)
        with pytest.raises(ValueError):
            fc.mlp_init([5, 0, 2], seed=0)


class TestForward:
    def test_zero_model_uniform_probabilities(self):
        model = fc.mlp_init([4, 3, 5], seed=0)
        zeroed = fc.MlpModel(
            model.layer_sizes,
            tuple(np.zeros_like(w) for w in model.weights),
            tuple(np.zeros_like(b) for b in model.biases),
            0,
        )
        probs = fc.forward(zeroed, np.array([1.0, -2.0, 0.5, 3.0]))
        assert np.allclose(probs, 0.2, atol=1e-12)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(2)
        model = fc.mlp_init([6, 8, 4], seed=2)
        for _ in range(20):
            probs = fc.forward(model, rng.normal(0, 3, size=6))
            assert probs.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(probs >= 0)

    def test_uniform_logit_shift_invariant(self):
        rng = np.random.default_rng(3)
        model = fc.mlp_init([5, 4, 3], seed=3)
        shifted = fc.MlpModel(
            model.layer_sizes,
            model.weights,
            model.biases[:-1] + (model.biases[-1] + 7.5,),
            model.seed,
        )
        x = rng.normal(0, 1, size=5)
        assert np.allclose(fc.forward(model, x), fc.forward(shifted, x), atol=1e-12)

    def test_softmax_stable_for_huge_inputs(self):
        model = fc.mlp_init([3, 4, 2], seed=4)
        probs = fc.forward(model, np.array([1e6, -1e6, 1e6]))
        assert not np.any(np.isnan(probs))
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_dimension_mismatch_rejected(self):
        model = fc.mlp_init([3, 4, 2], seed=0)
        with pytest.raises(ValueError):
            fc.forward(model, np.zeros(4))


class TestTrain:
    def test_separable_blobs_perfect_holdout(self):
        centers = separated_blob_centers(4, 5, separation=30.0)
        X, labels = gaussian_blobs(10, centers, spread=1.0, seed=5)
        model = fc.mlp_init([5, 64, 4], seed=5)
        trained, metrics = fc.train_mlp(
            model, X, labels, fc.TrainConfig(epochs=200, seed=5)
        )
        assert metrics.accuracy == 1.0

    def test_single_training_sample_memorized(self):
        # two identical rows: the stratified split leaves one for training
        X = np.tile([0.3, -0.7], (2, 1))
        labels = np.array([0, 0])
        model = fc.mlp_init([2, 8, 3], seed=6)
        trained, metrics = fc.train_mlp(
            model, X, labels, fc.TrainConfig(epochs=500, learning_rate=0.5, seed=6)
        )
        assert metrics.loss_history[-1] < 1e-3

    def test_loss_decreases_on_separable_data(self):
        centers = separated_blob_centers(3, 4, separation=20.0)
        X, labels = gaussian_blobs(8, centers, spread=1.0, seed=7)
        model = fc.mlp_init([4, 16, 3], seed=7)
        _, metrics = fc.train_mlp(model, X, labels, fc.TrainConfig(epochs=100, seed=7))
        assert metrics.loss_history[-1] < metrics.loss_history[0]

    def test_confusion_rows_count_classes(self):
        centers = separated_blob_centers(3, 3, separation=25.0)
        X, labels = gaussian_blobs(10, centers, spread=1.0, seed=8)
        model = fc.mlp_init([3, 16, 3], seed=8)
        _, metrics = fc.train_mlp(model, X, labels, fc.TrainConfig(epochs=50, seed=8))
        # row sums = held-out per-class counts; trace/total = accuracy
        assert metrics.confusion.sum() == 6  # 20% of 30, stratified
        assert metrics.accuracy == pytest.approx(
            np.trace(metrics.confusion) / metrics.confusion.sum()
        )

    def test_deterministic_given_seed(self):
        centers = separated_blob_centers(2, 3, separation=15.0)
        X, labels = gaussian_blobs(12, centers, spread=1.0, seed=9)
        model = fc.mlp_init([3, 8, 2], seed=9)
        t1, m1 = fc.train_mlp(model, X, labels, fc.TrainConfig(epochs=40, seed=9))
        t2, m2 = fc.train_mlp(model, X, labels, fc.TrainConfig(epochs=40, seed=9))
        for w1, w2 in zip(t1.weights, t2.weights):
            assert np.array_equal(w1, w2)
        assert m1.loss_history == m2.loss_history

    def test_input_model_not_mutated(self):
        centers = separated_blob_centers(2, 2, separation=15.0)
        X, labels = gaussian_blobs(10, centers, spread=1.0, seed=10)
        model = fc.mlp_init([2, 4, 2], seed=10)
        before = [w.copy() for w in model.weights]
        fc.train_mlp(model, X, labels, fc.TrainConfig(epochs=10, seed=10))
        for w, b in zip(model.weights, before):
            assert np.array_equal(w, b)

    def test_small_class_names_class_in_error(self):
        X = np.zeros((4, 2))
        X[:, 0] = np.arange(4)
        labels = np.array([0, 0, 0, 1])
        model = fc.mlp_init([2, 4, 2], seed=0)
        with pytest.raises(SplitError, match="class 1"):
            fc.train_mlp(model, X, labels, fc.TrainConfig(seed=0))


class TestStratifiedSplit:
    def test_every_class_on_both_sides(self):
        labels = np.array([0] * 10 + [1] * 5 + [2] * 2)
        rng = np.random.default_rng(0)
        train_idx, val_idx = stratified_split(labels, 0.2, rng)
        for c in (0, 1, 2):
            assert np.any(labels[train_idx] == c)
            assert np.any(labels[val_idx] == c)
        assert len(set(train_idx) & set(val_idx)) == 0
        assert len(train_idx) + len(val_idx) == len(labels)


class TestGradCheck:
    def test_small_models_pass(self):
        rng = np.random.default_rng(11)
        for shape in ([5, 4, 3], [10, 8, 4]):
            for seed in range(5):
                x = rng.normal(0, 1, size=shape[0])
                model = nudged_model(shape, seed, x)
                label = int(rng.integers(shape[-1]))
                assert fc.grad_check(model, x, label) < 1e-4

    def test_zero_model_bias_gradient_closed_form(self):
        shape = [3, 4, 5]
        model = fc.mlp_init(shape, seed=0)
        zeroed = fc.MlpModel(
            shape,
            tuple(np.zeros_like(w) for w in model.weights),
            tuple(np.zeros_like(b) for b in model.biases),
            0,
        )
        from facecluster.mlp import _gradients

        x = np.array([0.5, -1.0, 2.0])
        _, grad_b = _gradients(zeroed, x[None, :], np.array([2]))
        onehot = np.zeros(5)
        onehot[2] = 1.0
        assert np.allclose(grad_b[-1], np.full(5, 0.2) - onehot, atol=1e-12)

    def test_central_difference_truncation_order(self):
        # with a large step the truncation term C*eps^2 dominates roundoff,
        # so doubling eps should scale the numeric-gradient error by ~4
        model = nudged_model([3, 4, 2], 12, np.array([0.4, -0.2, 0.9]))
        x = np.array([0.4, -0.2, 0.9])
        label = 1
        from facecluster.mlp import _gradients

        grad_w, _ = _gradients(model, x[None, :], np.array([label]))
        analytic = grad_w[0][0, 0]

        def numeric(eps):
            w0 = [w.copy() for w in model.weights]
            w0[0][0, 0] += eps
            up = cross_entropy(
                fc.MlpModel(model.layer_sizes, tuple(w0), model.biases, 0),
                x[None, :], np.array([label]),
            )
            w0[0][0, 0] -= 2 * eps
            down = cross_entropy(
                fc.MlpModel(model.layer_sizes, tuple(w0), model.biases, 0),
                x[None, :], np.array([label]),
            )
            return (up - down) / (2 * eps)

        e1 = abs(numeric(0.05) - analytic)
        e2 = abs(numeric(0.1) - analytic)
        if e1 > 1e-10:
            assert 2.0 <= e2 / e1 <= 8.0


class TestSerialization:
    def test_round_trip(self, tmp_path):
        model = fc.mlp_init([7, 5, 3], seed=13)
        path = tmp_path / "mlp.json"
        fc.save_mlp(model, path)
        back = fc.load_mlp(path)
        assert back.layer_sizes == model.layer_sizes
        for w1, w2 in zip(back.weights, model.weights):
            assert np.array_equal(w1, w2)

    def test_unknown_schema_rejected(self):
        doc = mlp_to_dict(fc.mlp_init([2, 2], seed=0))
        doc["schema_version"] = 0
        with pytest.raises(ValueError, match="schema_version"):
            mlp_from_dict(doc)

    def test_forward_identical_after_reload(self, tmp_path):
        rng = np.random.default_rng(14)
        model = fc.mlp_init([6, 10, 4], seed=14)
        path = tmp_path / "m.json"
        fc.save_mlp(model, path)
        back = fc.load_mlp(path)
        X = rng.normal(0, 1, size=(5, 6))
        assert np.array_equal(forward_batch(model, X), forward_batch(back, X))
