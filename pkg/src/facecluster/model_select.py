"""Choosing k: elbow curve, knee suggestion, silhouette analysis.

The elbow curve is made monotone by construction: besides the random
restarts, each k also tries a warm start built from the best (k-1) centroids
plus the sample farthest from them, so SSE can only fall as k grows. The
knee suggestion (max chord distance on the normalized curve) is advisory;
the final choice follows the silhouette rule: prefer k where every cluster's
silhouette blade reaches past the dataset average (see KCandidate), then
higher overall mean, then more balanced cluster sizes, then smaller k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedSilhouetteError
from .kmeans import assign_all, kmeans_fit, lloyd_from


@dataclass(frozen=True)
class ElbowCurve:
    points: tuple[tuple[int, float], ...]  # (k, best SSE)
    k_range: tuple[int, int]


@dataclass(frozen=True, eq=False)
class SilhouetteReport:
    per_sample: np.ndarray
    per_cluster_mean: np.ndarray  # indexed by cluster id
    overall_mean: float
    cluster_sizes: np.ndarray

    def __post_init__(self):
        s = np.array(self.per_sample, dtype=np.float64)
        if s.min() < -1.0 - 1e-12 or s.max() > 1.0 + 1e-12:
            raise ValueError("silhouette values must lie in [-1, 1]")
        s.flags.writeable = False
        object.__setattr__(self, "per_sample", s)


@dataclass(frozen=True)
class KCandidate:
    """Silhouette summary for one candidate k.

    all_above_overall operationalizes reading a silhouette plot: every
    cluster's blade must reach past the dataset-average line (its best
    sample silhouette is at least the overall mean) and the average itself
    must clear 0.5, the conventional floor for substantial structure. A
    literal "every cluster mean exceeds the overall mean" cannot hold, since
    the overall mean is exactly the size-weighted mean of the cluster means.
    """

    k: int
    overall_mean: float
    per_cluster_mean: tuple[float, ...]
    all_above_overall: bool
    size_imbalance: float  # largest cluster / smallest cluster


# Overall-mean floor for the plot-reading rule; below it, silhouette
# structure is too weak for per-cluster comparisons to mean anything.
SUBSTANTIAL_SILHOUETTE = 0.5

# Reach tolerance for "the blade crosses the average line": about the visual
# resolution of a silhouette plot, and an order of magnitude below the gap
# left by a genuinely bad cluster.
SILHOUETTE_REACH_TOL = 0.05


@dataclass(frozen=True)
class KSelection:
    candidates: tuple[KCandidate, ...]
    chosen_k: int
    rationale: tuple[str, ...]


def elbow_curve(
    X: np.ndarray, k_min: int, k_max: int, seed: int = 0, restarts: int = 10
) -> ElbowCurve:
    """Best SSE per k over random restarts plus the warm-start candidate."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not (1 <= k_min <= k_max <= n):
        raise ValueError(f"need 1 <= k_min <= k_max <= {n}, got [{k_min}, {k_max}]")

    points = []
    prev_centroids = None
    for k in range(k_min, k_max + 1):
        model = kmeans_fit(X, k, seed=seed, restarts=restarts)
        best_sse = model.inertia
        best_centroids = model.centroids
        if prev_centroids is not None:
            far = _farthest_from(X, prev_centroids)
            warm_init = np.vstack([prev_centroids, X[far]])
            centroids, _, warm_sse = lloyd_from(X, warm_init)
            if warm_sse < best_sse:
                best_sse = warm_sse
                best_centroids = centroids
        points.append((k, best_sse))
        prev_centroids = best_centroids
    return ElbowCurve(tuple(points), (k_min, k_max))


def _farthest_from(X: np.ndarray, centroids: np.ndarray) -> int:
    diff = X[:, None, :] - centroids[None, :, :]
    dist = np.einsum("nkr,nkr->nk", diff, diff).min(axis=1)
    return int(np.argmax(dist))


def suggest_knee(curve: ElbowCurve) -> int:
    """k of the interior point farthest from the endpoint chord.

    Both axes are scaled to [0, 1] first; ties go to the smaller k. Purely
    advisory: silhouette-based selection makes the actual choice.
    """
    pts = curve.points
    if len(pts) < 3:
        raise ValueError(f"need at least 3 curve points, got {len(pts)}")
    ks = np.array([p[0] for p in pts], dtype=np.float64)
    ss = np.array([p[1] for p in pts], dtype=np.float64)
    u = (ks - ks[0]) / (ks[-1] - ks[0])
    span = ss.max() - ss.min()
    v = (ss - ss.min()) / span if span > 0 else np.zeros_like(ss)

    p0 = np.array([u[0], v[0]])
    p1 = np.array([u[-1], v[-1]])
    chord = p1 - p0
    chord_len = float(np.hypot(*chord))
    best_k = None
    best_dist = -1.0
    for i in range(1, len(pts) - 1):
        p = np.array([u[i], v[i]])
        if chord_len == 0:
            dist = 0.0
        else:
            dist = abs(chord[0] * (p[1] - p0[1]) - chord[1] * (p[0] - p0[0])) / chord_len
        if dist > best_dist + 1e-15:
            best_dist = dist
            best_k = int(ks[i])
    return best_k


def silhouette_sample(X: np.ndarray, labels: np.ndarray, i: int) -> float:
    """Silhouette of one sample: (b - a) / max(a, b) with Euclidean distances.

    a is the mean distance to the other members of its own cluster (0 for a
    singleton, which scores 0 by convention); b is the smallest mean distance
    to any other cluster.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    present = np.unique(labels)
    if len(present) < 2:
        raise UndefinedSilhouetteError("silhouette needs at least 2 clusters")
    own = labels[i]
    dists = np.sqrt(((X - X[i]) ** 2).sum(axis=1))

    same = (labels == own)
    same[i] = False
    if not same.any():
        return 0.0
    a = float(dists[same].mean())
    b = min(float(dists[labels == c].mean()) for c in present if c != own)
    denom = max(a, b)
    if denom == 0.0:
        return 0.0
    return (b - a) / denom


def silhouette_report(X: np.ndarray, labels: np.ndarray) -> SilhouetteReport:
    """Per-sample silhouettes with per-cluster and overall means."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = X.shape[0]
    present = np.unique(labels)
    if len(present) < 2:
        raise UndefinedSilhouetteError("silhouette needs at least 2 clusters")

    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=-1)
    dist = np.sqrt(np.maximum(d2, 0.0))
    k = int(labels.max()) + 1
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    sums = dist @ onehot  # (n, k): total distance from i to each cluster
    counts = onehot.sum(axis=0)

    s = np.zeros(n)
    for i in range(n):
        own = labels[i]
        if counts[own] <= 1:
            continue  # singleton scores 0
        a = sums[i, own] / (counts[own] - 1)
        b = min(
            sums[i, c] / counts[c] for c in present if c != own
        )
        denom = max(a, b)
        s[i] = 0.0 if denom == 0.0 else (b - a) / denom

    per_cluster = np.zeros(k)
    sizes = np.zeros(k, dtype=np.int64)
    for c in present:
        mask = labels == c
        per_cluster[c] = s[mask].mean()
        sizes[c] = mask.sum()
    return SilhouetteReport(
        per_sample=s,
        per_cluster_mean=per_cluster,
        overall_mean=float(s.mean()),
        cluster_sizes=sizes,
    )


def select_k(
    X: np.ndarray, k_min: int, k_max: int, seed: int = 0, restarts: int = 10
) -> KSelection:
    """Fit each k, score it with silhouettes, and apply the selection rule.

    Rule order: (1) keep k where every cluster's silhouette reaches past the
    dataset average and the average shows substantial structure (see
    KCandidate), (2) prefer higher overall mean, (3) prefer lower size
    imbalance, (4) prefer smaller k. When no k passes rule 1 the selection
    falls back to ranking every candidate, and the rationale trace records
    the fallback. Each k is fitted with seed + k so per-k work is independent
    and order-free.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k_min < 2:
        raise ValueError(f"k_min must be >= 2 for silhouettes, got {k_min}")
    if not (k_min <= k_max <= n):
        raise ValueError(f"need {k_min} <= k_max <= {n}, got k_max={k_max}")

    candidates = []
    for k in range(k_min, k_max + 1):
        model = kmeans_fit(X, k, seed=seed + k, restarts=restarts)
        assignment = assign_all(model, X)
        report = silhouette_report(X, assignment.labels)
        present = np.unique(assignment.labels)
        sizes = report.cluster_sizes[present]
        cluster_best = np.array(
            [report.per_sample[assignment.labels == c].max() for c in present]
        )
        candidates.append(
            KCandidate(
                k=k,
                overall_mean=report.overall_mean,
                per_cluster_mean=tuple(float(v) for v in report.per_cluster_mean),
                all_above_overall=bool(
                    np.all(cluster_best >= report.overall_mean - SILHOUETTE_REACH_TOL)
                    and report.overall_mean >= SUBSTANTIAL_SILHOUETTE
                ),
                size_imbalance=float(sizes.max() / sizes.min()),
            )
        )

    rationale = []
    passing = [c for c in candidates if c.all_above_overall]
    if passing:
        rationale.append(
            "rule 1 (every cluster reaches the overall silhouette mean, and the "
            "overall mean shows substantial structure): candidates "
            + ", ".join(f"k={c.k}" for c in passing)
        )
        pool = passing
    else:
        rationale.append(
            "rule 1 (every cluster reaches the overall silhouette mean, and the "
            "overall mean shows substantial structure): no candidate passes; "
            "fallback to ranking all k"
        )
        pool = candidates

    ranked = sorted(pool, key=lambda c: (-c.overall_mean, c.size_imbalance, c.k))
    chosen = ranked[0]
    rationale.append(
        f"rule 2 (highest overall mean): k={chosen.k} "
        f"(overall mean {chosen.overall_mean:.6f})"
    )
    rationale.append(
        f"rule 3 (size imbalance) and rule 4 (smaller k) break ties; "
        f"chosen k={chosen.k} with imbalance {chosen.size_imbalance:.3f}"
    )
    return KSelection(tuple(candidates), chosen.k, tuple(rationale))


def elbow_csv(curve: ElbowCurve) -> str:
    lines = ["k,sse"]
    for k, s in curve.points:
        lines.append(f"{k},{float(s)!r}")
    return "\n".join(lines) + "\n"


def silhouette_csv(report: SilhouetteReport, labels, sample_ids=None) -> str:
    labels = np.asarray(labels, dtype=np.int64)
    if sample_ids is None:
        sample_ids = [str(i) for i in range(len(labels))]
    lines = ["sample_id,cluster,s"]
    for sid, c, s in zip(sample_ids, labels, report.per_sample):
        lines.append(f"{sid},{int(c)},{float(s)!r}")
    return "\n".join(lines) + "\n"
