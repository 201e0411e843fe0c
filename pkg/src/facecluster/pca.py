"""Principal component analysis in five steps.

Standardize each feature, form the population covariance (divide by n),
eigendecompose it with cyclic Jacobi rotations, pick how many components to
keep, and recast data onto them. When features vastly outnumber samples the
n x n Gram matrix is decomposed instead of the d x d covariance; the nonzero
spectra coincide and eigenvectors map back through the data matrix, which is
what makes 50176-dimensional face vectors tractable at a hundred samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ioutil import read_json, write_json

PCA_SCHEMA_VERSION = 1

# Ratio of features to samples beyond which the Gram path is mandatory.
GRAM_RATIO = 4

_RANK_REL_TOL = 1e-12
_EIGENVALUE_CLAMP = -1e-10


@dataclass(frozen=True, eq=False)
class StandardizationParams:
    """Per-feature location and scale: z = (x - mean) / scale.

    Zero-variance features store scale 1 so they standardize to exactly 0 and
    drop out of the covariance (constant border pixels of face crops are the
    typical case).
    """

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64)
        scale = np.array(self.scale, dtype=np.float64)
        if mean.ndim != 1 or scale.shape != mean.shape:
            raise ValueError("mean and scale must be 1-D vectors of equal length")
        if np.any(scale <= 0):
            raise ValueError("scale entries must be positive")
        mean.flags.writeable = False
        scale.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    @property
    def n_features(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class PcaModel:
    standardization: StandardizationParams
    components: np.ndarray  # (retained, d), orthonormal rows
    eigenvalues: np.ndarray  # (retained,), descending, nonnegative
    total_variance: float  # sum of ALL covariance eigenvalues (its trace)

    def __post_init__(self):
        comps = np.array(self.components, dtype=np.float64)
        evs = np.array(self.eigenvalues, dtype=np.float64)
        if comps.ndim != 2 or evs.ndim != 1 or comps.shape[0] != evs.shape[0]:
            raise ValueError("components and eigenvalues disagree on the retained count")
        if np.any(np.diff(evs) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        if np.any(evs < 0):
            raise ValueError("eigenvalues must be nonnegative")
        comps.flags.writeable = False
        evs.flags.writeable = False
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "eigenvalues", evs)

    @property
    def retained(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]


def fit_standardizer(X: np.ndarray) -> StandardizationParams:
    """Column means and population standard deviations (zero sigma becomes 1)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"need a 2-D matrix with at least 2 rows, got shape {X.shape}")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return StandardizationParams(mean, scale)


def standardize(X: np.ndarray, params: StandardizationParams) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    cols = X.shape[-1]
    if cols != params.n_features:
        raise ValueError(f"expected {params.n_features} columns, got {cols}")
    return (X - params.mean) / params.scale


def covariance(Z: np.ndarray) -> np.ndarray:
    """Population covariance (divide by n) of the column-centered matrix."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise ValueError(f"need a 2-D matrix with at least 2 rows, got shape {Z.shape}")
    Zc = Z - Z.mean(axis=0)
    C = (Zc.T @ Zc) / Z.shape[0]
    return (C + C.T) / 2.0


def eigendecompose(
    C: np.ndarray, *, tol: float = 1e-12, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors (columns).

    Cyclic Jacobi rotations run until every off-diagonal magnitude falls
    below tol, scaled by the matrix magnitude when entries exceed 1 (an
    absolute 1e-12 is below the floating-point floor for large matrices).
    Each eigenvector is sign-fixed so its largest-magnitude entry is positive
    (first such entry on ties).
    """
    A = np.array(C, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if n == 0:
        raise ValueError("matrix must be nonempty")
    asym = float(np.abs(A - A.T).max()) if n > 1 else 0.0
    if asym > 1e-9:
        raise ValueError(f"matrix is not symmetric (max |C - C^T| = {asym:g})")
    A = (A + A.T) / 2.0
    V = np.eye(n)
    threshold = tol * max(1.0, float(np.abs(A).max()))

    for _ in range(max_sweeps):
        off = _max_offdiag(A)
        if off < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < threshold:
                    continue
                _rotate(A, V, p, q)
    else:
        raise ArithmeticError(f"Jacobi did not converge within {max_sweeps} sweeps")

    values = np.diag(A).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = V[:, order]
    for i in range(n):
        col = vectors[:, i]
        j = int(np.argmax(np.abs(col)))
        if col[j] < 0:
            vectors[:, i] = -col
    return values, vectors


def _max_offdiag(A: np.ndarray) -> float:
    if A.shape[0] < 2:
        return 0.0
    off = np.abs(A - np.diag(np.diag(A)))
    return float(off.max())


def _rotate(A: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    app, aqq, apq = A[p, p], A[q, q], A[p, q]
    theta = (aqq - app) / (2.0 * apq)
    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    if theta == 0.0:
        t = 1.0
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    col_p = A[:, p].copy()
    col_q = A[:, q].copy()
    A[:, p] = c * col_p - s * col_q
    A[:, q] = s * col_p + c * col_q
    row_p = A[p, :].copy()
    row_q = A[q, :].copy()
    A[p, :] = c * row_p - s * row_q
    A[q, :] = s * row_p + c * row_q
    A[p, p] = app - t * apq
    A[q, q] = aqq + t * apq
    A[p, q] = 0.0
    A[q, p] = 0.0

    v_p = V[:, p].copy()
    V[:, p] = c * v_p - s * V[:, q]
    V[:, q] = s * v_p + c * V[:, q]


def _sign_fix_rows(components: np.ndarray) -> np.ndarray:
    for i in range(components.shape[0]):
        row = components[i]
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            components[i] = -row
    return components


def fit_pca(X: np.ndarray, retention=0.9999, *, method: str = "auto") -> PcaModel:
    """Standardize, decompose, and retain components.

    retention: an int keeps exactly that many components; a float in (0, 1]
    keeps the smallest count whose cumulative explained-variance fraction
    reaches it (1.0 keeps every positive-eigenvalue component).

    method: "auto" decomposes the n x n Gram matrix whenever d > 4 n and the
    d x d covariance otherwise; "gram" / "direct" force a path (the direct
    path at face-vector width is deliberately never chosen by "auto").
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"need a 2-D matrix with at least 2 rows, got shape {X.shape}")
    if method not in ("auto", "gram", "direct"):
        raise ValueError(f"unknown method {method!r}")
    n, d = X.shape

    params = fit_standardizer(X)
    Z = standardize(X, params)
    Zc = Z - Z.mean(axis=0)
    total_variance = float((Zc * Zc).sum() / n)

    if method == "auto":
        method = "gram" if d > GRAM_RATIO * n else "direct"

    if method == "direct":
        values, vectors = eigendecompose((Zc.T @ Zc) / n)
        components = vectors.T.copy()
    else:
        gram = (Zc @ Zc.T) / n
        gram = (gram + gram.T) / 2.0
        values, U = eigendecompose(gram)
        rank_tol = _RANK_REL_TOL * max(1.0, float(values[0]) if len(values) else 1.0)
        rows = []
        kept = []
        for i, lam in enumerate(values):
            if lam <= rank_tol:
                break
            v = Zc.T @ U[:, i]
            v /= np.linalg.norm(v)
            rows.append(v)
            kept.append(lam)
        values = np.array(kept)
        components = np.array(rows) if rows else np.empty((0, d))

    if len(values) and values.min() < _EIGENVALUE_CLAMP:
        raise ArithmeticError(
            f"covariance eigenvalue {values.min():g} below the clamp floor"
        )
    values = np.maximum(values, 0.0)
    rank_tol = _RANK_REL_TOL * max(1.0, float(values[0]) if len(values) else 1.0)
    available = int(np.sum(values > rank_tol))
    if available == 0:
        raise ValueError("data has no variance; nothing to retain")

    if isinstance(retention, (bool,)):
        raise ValueError("retention must be an int count or float fraction")
    if isinstance(retention, (int, np.integer)):
        r = int(retention)
        if r < 1 or r > available:
            raise ValueError(
                f"retention {r} exceeds the available rank {available}"
            )
    else:
        frac = float(retention)
        if not (0.0 < frac <= 1.0):
            raise ValueError(f"retention fraction must be in (0, 1], got {frac}")
        cum = np.cumsum(values[:available]) / total_variance
        reaching = np.flatnonzero(cum >= frac)
        r = int(reaching[0]) + 1 if len(reaching) else available

    components = _sign_fix_rows(components[:r].copy())
    return PcaModel(params, components, values[:r], total_variance)


def project(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Scores of rows of X in the retained component basis."""
    X = np.asarray(X, dtype=np.float64)
    one_dim = X.ndim == 1
    if one_dim:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} columns, got {X.shape[1]}")
    scores = standardize(X, model.standardization) @ model.components.T
    return scores[0] if one_dim else scores


def reconstruct(model: PcaModel, scores: np.ndarray) -> np.ndarray:
    """Inverse of project for full-rank retention (lossy otherwise)."""
    scores = np.asarray(scores, dtype=np.float64)
    Z = scores @ model.components
    return Z * model.standardization.scale + model.standardization.mean


def explained_variance(model: PcaModel) -> list[tuple[int, float, float]]:
    """(component index, variance fraction, cumulative fraction) per component."""
    out = []
    cum = 0.0
    for i, lam in enumerate(model.eigenvalues):
        frac = float(lam) / model.total_variance
        cum += frac
        out.append((i, frac, cum))
    return out


def pca_to_dict(model: PcaModel) -> dict:
    return {
        "schema_version": PCA_SCHEMA_VERSION,
        "d": model.n_features,
        "retained": model.retained,
        "mean": model.standardization.mean,
        "scale": model.standardization.scale,
        "eigenvalues": model.eigenvalues,
        "components": model.components.reshape(-1),
        "total_variance": model.total_variance,
    }


def pca_from_dict(doc: dict) -> PcaModel:
    if doc.get("schema_version") != PCA_SCHEMA_VERSION:
        raise ValueError(f"unsupported pca schema_version {doc.get('schema_version')!r}")
    d = doc["d"]
    r = doc["retained"]
    components = np.array(doc["components"], dtype=np.float64).reshape(r, d)
    return PcaModel(
        StandardizationParams(np.array(doc["mean"]), np.array(doc["scale"])),
        components,
        np.array(doc["eigenvalues"], dtype=np.float64),
        float(doc["total_variance"]),
    )


def save_pca(model: PcaModel, path) -> None:
    write_json(path, pca_to_dict(model))


def load_pca(path) -> PcaModel:
    return pca_from_dict(read_json(path))
