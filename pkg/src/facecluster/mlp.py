"""A small feed-forward network assigning projected faces to clusters.

Rectified hidden layers, softmax output, mean cross-entropy loss, plain
mini-batch gradient descent. Training is single-threaded and fully seeded:
the same data and config reproduce the same weights bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SplitError
from .ioutil import read_json, write_json

MLP_SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]  # per layer, shape (n_in, n_out)
    biases: tuple[np.ndarray, ...]
    seed: int

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layers")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != expect or b.shape != (expect[1],):
                raise ValueError(
                    f"layer {i} shapes {w.shape}/{b.shape} do not match sizes {expect}"
                )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 16
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass(frozen=True, eq=False)
class EvalMetrics:
    accuracy: float
    confusion: np.ndarray  # (k, k), rows = true class, cols = predicted
    loss_history: tuple[float, ...]


def mlp_init(layer_sizes, seed: int = 0) -> MlpModel:
    """Glorot-uniform weights from a seeded generator, zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError(f"layer sizes must be >= 1 with >= 2 layers, got {sizes}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, tuple(weights), tuple(biases), seed)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_pass(model: MlpModel, X: np.ndarray):
    """Activations and pre-activations for every layer, batch-shaped."""
    activations = [X]
    pre = []
    a = X
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        pre.append(z)
        a = _softmax(z) if i == last else np.maximum(z, 0.0)
        activations.append(a)
    return activations, pre


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Class probabilities for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.layer_sizes[0],):
        raise ValueError(
            f"expected input of length {model.layer_sizes[0]}, got shape {x.shape}"
        )
    activations, _ = _forward_pass(model, x[None, :])
    return activations[-1][0]


def forward_batch(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.layer_sizes[0]:
        raise ValueError(
            f"expected shape (n, {model.layer_sizes[0]}), got {X.shape}"
        )
    activations, _ = _forward_pass(model, X)
    return activations[-1]


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(model: MlpModel, X: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy of the true classes."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    activations, pre = _forward_pass(model, X)
    logp = _log_softmax(pre[-1])
    return float(-logp[np.arange(len(labels)), labels].mean())


def _gradients(model: MlpModel, X: np.ndarray, labels: np.ndarray):
    """Analytic gradients of mean cross-entropy for a batch."""
    n = X.shape[0]
    activations, pre = _forward_pass(model, X)
    onehot = np.zeros_like(activations[-1])
    onehot[np.arange(n), labels] = 1.0
    delta = (activations[-1] - onehot) / n

    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (pre[layer - 1] > 0.0)
    return grad_w, grad_b


def stratified_split(labels: np.ndarray, fraction: float, rng: np.random.Generator):
    """Per-class held-out indices; every class keeps at least one sample on each side."""
    labels = np.asarray(labels, dtype=np.int64)
    train_idx = []
    val_idx = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < 2:
            raise SplitError(
                f"class {c} has {len(members)} sample(s); need >= 2 for a stratified split"
            )
        members = members[rng.permutation(len(members))]
        n_val = min(len(members) - 1, max(1, int(round(fraction * len(members)))))
        val_idx.extend(members[:n_val])
        train_idx.extend(members[n_val:])
    return np.sort(np.array(train_idx)), np.sort(np.array(val_idx))


def train(
    model: MlpModel, X: np.ndarray, labels: np.ndarray, config: TrainConfig
) -> tuple[MlpModel, EvalMetrics]:
    """Mini-batch gradient descent on mean cross-entropy.

    Splits off a stratified validation set, shuffles every epoch from the
    seeded generator, records the full-training-set loss per epoch, and
    evaluates accuracy plus the confusion matrix on the held-out split.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != labels.shape[0]:
        raise ValueError("X must be (n, d) with one label per row")
    k = model.layer_sizes[-1]
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k}), got [{labels.min()}, {labels.max()}]")

    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = stratified_split(labels, config.validation_fraction, rng)
    Xt, yt = X[train_idx], labels[train_idx]
    Xv, yv = X[val_idx], labels[val_idx]

    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    current = MlpModel(model.layer_sizes, tuple(weights), tuple(biases), model.seed)

    history = []
    for _ in range(config.epochs):
        order = rng.permutation(len(Xt))
        for start in range(0, len(Xt), config.batch_size):
            batch = order[start : start + config.batch_size]
            grad_w, grad_b = _gradients(current, Xt[batch], yt[batch])
            for i in range(len(weights)):
                weights[i] -= config.learning_rate * grad_w[i]
                biases[i] -= config.learning_rate * grad_b[i]
        history.append(cross_entropy(current, Xt, yt))

    probs = forward_batch(current, Xv)
    predicted = probs.argmax(axis=1)
    confusion = np.zeros((k, k), dtype=np.int64)
    for true, pred in zip(yv, predicted):
        confusion[true, pred] += 1
    accuracy = float(np.trace(confusion)) / len(yv)
    return current, EvalMetrics(accuracy, confusion, tuple(history))


def grad_check(model: MlpModel, x: np.ndarray, label: int, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per parameter is |a - n| / max(1e-8, |a| + |n|). Rectifier
    kinks make the comparison meaningless when a pre-activation sits within
    epsilon of zero; callers nudge inputs or biases away from zero first.
    """
    x = np.asarray(x, dtype=np.float64)
    X = x[None, :]
    labels = np.array([label], dtype=np.int64)
    grad_w, grad_b = _gradients(model, X, labels)

    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]

    def loss() -> float:
        m = MlpModel(model.layer_sizes, tuple(weights), tuple(biases), model.seed)
        return cross_entropy(m, X, labels)

    worst = 0.0
    for arrays, grads in ((weights, grad_w), (biases, grad_b)):
        for arr, grad in zip(arrays, grads):
            flat = arr.reshape(-1)
            gflat = np.asarray(grad).reshape(-1)
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + epsilon
                up = loss()
                flat[idx] = orig - epsilon
                down = loss()
                flat[idx] = orig
                numeric = (up - down) / (2.0 * epsilon)
                analytic = gflat[idx]
                rel = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
                worst = max(worst, rel)
    return worst


def mlp_to_dict(model: MlpModel) -> dict:
    return {
        "schema_version": MLP_SCHEMA_VERSION,
        "layer_sizes": list(model.layer_sizes),
        "weights": [w.reshape(-1) for w in model.weights],
        "biases": [b for b in model.biases],
        "seed": model.seed,
    }


def mlp_from_dict(doc: dict) -> MlpModel:
    if doc.get("schema_version") != MLP_SCHEMA_VERSION:
        raise ValueError(f"unsupported mlp schema_version {doc.get('schema_version')!r}")
    sizes = tuple(doc["layer_sizes"])
    weights = tuple(
        np.array(w, dtype=np.float64).reshape(sizes[i], sizes[i + 1])
        for i, w in enumerate(doc["weights"])
    )
    biases = tuple(np.array(b, dtype=np.float64) for b in doc["biases"])
    return MlpModel(sizes, weights, biases, doc["seed"])


def save_mlp(model: MlpModel, path) -> None:
    write_json(path, mlp_to_dict(model))


def load_mlp(path) -> MlpModel:
    return mlp_from_dict(read_json(path))
