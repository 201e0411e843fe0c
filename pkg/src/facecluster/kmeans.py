"""Lloyd's k-means with seeded restarts and deterministic tie-breaking.

Initial centroids are k distinct data rows sampled without replacement.
Iteration stops when no point changes cluster; a centroid-shift tolerance
and an iteration cap guard against floating-point oscillation. Empty
clusters are repaired by reseeding to the point farthest from its own
centroid, which never increases the objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ioutil import read_json, write_json

KMEANS_SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class KMeansModel:
    k: int
    centroids: np.ndarray  # (k, r)
    inertia: float
    iterations: int
    seed: int
    restarts: int
    sse_trace: tuple[float, ...] = ()  # per-iteration SSE of the winning run

    def __post_init__(self):
        c = np.array(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != self.k:
            raise ValueError(f"centroids must be ({self.k}, r), got shape {c.shape}")
        if self.inertia < 0:
            raise ValueError(f"inertia must be >= 0, got {self.inertia}")
        c.flags.writeable = False
        object.__setattr__(self, "centroids", c)


@dataclass(frozen=True, eq=False)
class Assignment:
    labels: np.ndarray  # (n,) cluster index per sample
    distances: np.ndarray  # (n,) squared distance to own centroid

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64)
        dist = np.array(self.distances, dtype=np.float64)
        if labels.shape != dist.shape or labels.ndim != 1:
            raise ValueError("labels and distances must be matching 1-D arrays")
        if np.any(dist < 0):
            raise ValueError("squared distances must be >= 0")
        labels.flags.writeable = False
        dist.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "distances", dist)


def _squared_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centroids[None, :, :]
    return np.einsum("nkr,nkr->nk", diff, diff)


def sse(X: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    """Sum of squared distances from each sample to its assigned centroid."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if X.shape[0] != labels.shape[0]:
        raise ValueError("labels length must match the sample count")
    diff = X - centroids[labels]
    return float((diff * diff).sum())


def _initial_centroids(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    perm = rng.permutation(n)
    chosen: list[int] = []
    for i in perm:
        row = X[i]
        if any(np.array_equal(row, X[j]) for j in chosen):
            continue
        chosen.append(int(i))
        if len(chosen) == k:
            break
    return X[np.array(chosen)].copy()


def _lloyd(X: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float):
    n = X.shape[0]
    k = centroids.shape[0]
    centroids = centroids.copy()
    labels = None
    trace: list[float] = []

    for iteration in range(1, max_iter + 1):
        dist = _squared_distances(X, centroids)
        new_labels = np.argmin(dist, axis=1)
        trace.append(float(dist[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels

        new_centroids = centroids.copy()
        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                new_centroids[j] = X[labels == j].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if len(empties):
            own = dist[np.arange(n), labels].copy()
            for j in empties:
                far = int(np.argmax(own))
                new_centroids[j] = X[far]
                labels[far] = j
                own[far] = -1.0  # consumed; next empty takes the next farthest
        shift = float(np.max(np.abs(new_centroids - centroids)))
        centroids = new_centroids
        if shift < tol:
            break

    # Final assignment against the final centroids, so labels are a fixed
    # point of assign() regardless of which exit condition fired.
    dist = _squared_distances(X, centroids)
    labels = np.argmin(dist, axis=1)
    own = dist[np.arange(n), labels]
    inertia = float(own.sum())
    if not trace or inertia < trace[-1]:
        trace.append(inertia)
    return centroids, labels, inertia, iteration, tuple(trace)


def kmeans_fit(
    X: np.ndarray,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-8,
) -> KMeansModel:
    """Best of several seeded Lloyd runs, lowest SSE wins (ties: first run)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"X must be a nonempty 2-D matrix, got shape {X.shape}")
    n = X.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    distinct = np.unique(X, axis=0).shape[0]
    if distinct < k:
        raise ValueError(f"only {distinct} distinct rows, cannot seed {k} centroids")

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        init = _initial_centroids(X, k, rng)
        centroids, labels, inertia, iterations, trace = _lloyd(X, init, max_iter, tol)
        if best is None or inertia < best[2]:
            best = (centroids, labels, inertia, iterations, trace)

    centroids, _, inertia, iterations, trace = best
    return KMeansModel(
        k=k,
        centroids=centroids,
        inertia=inertia,
        iterations=iterations,
        seed=seed,
        restarts=restarts,
        sse_trace=trace,
    )


def lloyd_from(X: np.ndarray, init_centroids: np.ndarray, max_iter: int = 300, tol: float = 1e-8):
    """One Lloyd run from explicit initial centroids: (centroids, labels, sse)."""
    X = np.asarray(X, dtype=np.float64)
    centroids, labels, inertia, _, _ = _lloyd(
        X, np.asarray(init_centroids, dtype=np.float64), max_iter, tol
    )
    return centroids, labels, inertia


def assign(model: KMeansModel, x: np.ndarray) -> tuple[int, float]:
    """Nearest centroid index (lowest index on ties) and squared distance."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.centroids.shape[1],):
        raise ValueError(
            f"expected a vector of length {model.centroids.shape[1]}, got shape {x.shape}"
        )
    diff = model.centroids - x
    dist = np.einsum("kr,kr->k", diff, diff)
    j = int(np.argmin(dist))
    return j, float(dist[j])


def assign_all(model: KMeansModel, X: np.ndarray) -> Assignment:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.centroids.shape[1]:
        raise ValueError(
            f"expected shape (n, {model.centroids.shape[1]}), got {X.shape}"
        )
    dist = _squared_distances(X, model.centroids)
    labels = np.argmin(dist, axis=1)
    return Assignment(labels, dist[np.arange(X.shape[0]), labels])


def kmeans_to_dict(model: KMeansModel) -> dict:
    return {
        "schema_version": KMEANS_SCHEMA_VERSION,
        "k": model.k,
        "r": model.centroids.shape[1],
        "centroids": model.centroids.reshape(-1),
        "inertia": model.inertia,
        "seed": model.seed,
        "restarts": model.restarts,
    }


def kmeans_from_dict(doc: dict) -> KMeansModel:
    if doc.get("schema_version") != KMEANS_SCHEMA_VERSION:
        raise ValueError(f"unsupported kmeans schema_version {doc.get('schema_version')!r}")
    centroids = np.array(doc["centroids"], dtype=np.float64).reshape(doc["k"], doc["r"])
    return KMeansModel(
        k=doc["k"],
        centroids=centroids,
        inertia=float(doc["inertia"]),
        iterations=0,
        seed=doc["seed"],
        restarts=doc["restarts"],
    )


def save_kmeans(model: KMeansModel, path) -> None:
    write_json(path, kmeans_to_dict(model))


def load_kmeans(path) -> KMeansModel:
    return kmeans_from_dict(read_json(path))
