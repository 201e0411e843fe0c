"""Decision stumps and discrete AdaBoost over Haar feature responses.

A stump predicts "face" when polarity * value >= polarity * threshold. Vote
weights follow the classic boosted-cascade recipe: alpha_t = ln((1-e_t)/e_t),
with the weights of correctly classified samples multiplied by exp(-alpha_t)
(equivalently beta_t = e_t/(1-e_t)) and the distribution renormalized each
round.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import BoostingStalledError, DegenerateInputError
from .features import BAND_COUNTS, HaarFeature, _band_rects

_FEATURE_BLOCK = 4096  # stump sweep processes features in blocks of this size
_EPS_ERROR = 1e-12  # floor on epsilon_t so separable data gets a finite alpha


@dataclass(frozen=True)
class WeakClassifier:
    feature: Optional[HaarFeature]
    threshold: float
    polarity: int
    alpha: float = 0.0

    def __post_init__(self):
        if self.polarity not in (1, -1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity}")


@dataclass(frozen=True)
class StrongClassifier:
    """Ordered weak classifiers with vote weights and a decision threshold.

    Predicts face when sum(alpha_t * h_t) >= threshold; the training default
    is half the alpha sum. rounds_log carries per-round diagnostics
    (feature index, weighted error, alpha, post-update weight sum).
    """

    weak: tuple[WeakClassifier, ...]
    threshold: float
    rounds_log: tuple[dict, ...] = ()

    @property
    def alpha_sum(self) -> float:
        return float(sum(w.alpha for w in self.weak))


def stump_predict(values: np.ndarray, threshold: float, polarity: int) -> np.ndarray:
    """0/1 face votes for an array of feature values."""
    values = np.asarray(values, dtype=np.float64)
    return (polarity * values >= polarity * threshold).astype(np.int64)


def _validate_training_input(labels: np.ndarray, weights: np.ndarray) -> None:
    if labels.ndim != 1:
        raise ValueError("labels must be 1-D")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 (non-face) or 1 (face)")
    if labels.min() == labels.max():
        raise DegenerateInputError("training input contains a single class")
    if weights.shape != labels.shape:
        raise ValueError("weights and labels must have the same length")
    if abs(float(weights.sum()) - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {float(weights.sum())!r}")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")


class _StumpSearch:
    """Weighted best-stump sweep over a (samples x features) value matrix.

    Sort orders are computed once; each boosting round only re-gathers the
    current weights. Candidate thresholds per feature are the midpoints
    between consecutive distinct sorted values plus the two degenerate
    all-face / no-face cuts. Ties resolve to the smaller threshold, then
    polarity +1; across features, the lowest feature index wins.
    """

    def __init__(self, values: np.ndarray, labels: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("values must be (samples, features)")
        self.n, self.f = values.shape
        self.labels = np.asarray(labels, dtype=np.float64)
        self.order = np.argsort(values, axis=0, kind="stable")
        self.sorted_values = np.take_along_axis(values, self.order, axis=0)
        # Interior cut k (1..n-1) is valid only between distinct values.
        self.valid_interior = self.sorted_values[1:, :] > self.sorted_values[:-1, :]

    def best_per_block(self, weights, lo, hi):
        n = self.n
        order = self.order[:, lo:hi]
        vs = self.sorted_values[:, lo:hi]
        f = hi - lo

        wy = weights * self.labels
        w_sorted = np.take_along_axis(
            np.broadcast_to(weights[:, None], (n, f)), order, axis=0
        )
        wy_sorted = np.take_along_axis(np.broadcast_to(wy[:, None], (n, f)), order, axis=0)

        cum_face = np.zeros((n + 1, f))
        np.cumsum(wy_sorted, axis=0, out=cum_face[1:])
        cum_all = np.zeros((n + 1, f))
        np.cumsum(w_sorted, axis=0, out=cum_all[1:])
        cum_non = cum_all - cum_face
        total_face = cum_face[-1]
        total_non = cum_non[-1]

        # err[p, k, j]: p=0 is polarity +1 (face iff v >= theta), p=1 is -1.
        err = np.empty((2, n + 1, f))
        err[0] = cum_face + (total_non - cum_non)
        err[1] = cum_non + (total_face - cum_face)

        theta = np.empty((2, n + 1, f))
        mids = 0.5 * (vs[:-1] + vs[1:])
        theta[0, 1:n] = mids
        theta[1, 1:n] = mids
        theta[0, 0] = vs[0]  # all face
        theta[0, n] = vs[-1] + 1.0  # no face
        theta[1, 0] = vs[0] - 1.0  # no face
        theta[1, n] = vs[-1]  # all face

        invalid = ~self.valid_interior[:, lo:hi]
        err[0, 1:n][invalid] = np.inf
        err[1, 1:n][invalid] = np.inf

        best_err = err.min(axis=(0, 1))
        on_min = err == best_err
        theta_masked = np.where(on_min, theta, np.inf)
        best_theta = theta_masked.min(axis=(0, 1))
        plus_available = np.any(on_min[0] & (theta[0] == best_theta), axis=0)
        best_polarity = np.where(plus_available, 1, -1)
        return best_err, best_theta, best_polarity

    def best(self, weights: np.ndarray):
        """(feature index, threshold, polarity, weighted error) of the best stump."""
        best = None
        for lo in range(0, self.f, _FEATURE_BLOCK):
            hi = min(lo + _FEATURE_BLOCK, self.f)
            errs, thetas, pols = self.best_per_block(weights, lo, hi)
            j = int(np.argmin(errs))
            cand = (float(errs[j]), lo + j, float(thetas[j]), int(pols[j]))
            if best is None or cand[0] < best[0]:
                best = cand
        err, idx, theta, pol = best
        return idx, theta, pol, err


def train_stump(
    feature_values: np.ndarray, labels: np.ndarray, weights: np.ndarray
) -> tuple[WeakClassifier, float]:
    """Best threshold/polarity for one feature under the given sample weights.

    Returns the classifier without a vote weight (alpha stays 0) plus its
    weighted misclassification error.
    """
    values = np.asarray(feature_values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    _validate_training_input(labels, weights)
    search = _StumpSearch(values[:, None], labels)
    _, theta, pol, err = search.best(weights)
    return WeakClassifier(None, theta, pol), err


def feature_value_matrix(samples, features) -> np.ndarray:
    """(samples x features) matrix of base-window Haar responses.

    samples: list of IntegralImage, all the same square size (the base
    window). Corner lookups are vectorized across samples per feature.
    """
    if not samples:
        raise ValueError("no samples")
    size = samples[0].width
    for ii in samples:
        if ii.width != size or ii.height != size:
            raise ValueError("all sample windows must share the base window size")
    stack = np.stack([ii.padded for ii in samples])

    out = np.empty((len(samples), len(features)))
    for j, feat in enumerate(features):
        if feat.x + feat.w > size or feat.y + feat.h > size:
            raise ValueError(f"feature {feat} does not fit a {size}px window")
        cx, cy = BAND_COUNTS[feat.kind]
        dark, light = _band_rects(feat.kind, feat.x, feat.y, feat.w // cx, feat.h // cy)
        out[:, j] = _region_mean(stack, dark) - _region_mean(stack, light)
    return out


def _region_mean(stack: np.ndarray, rects) -> np.ndarray:
    total = np.zeros(stack.shape[0])
    area = 0
    for x, y, w, h in rects:
        total += (
            stack[:, y + h, x + w]
            - stack[:, y, x + w]
            - stack[:, y + h, x]
            + stack[:, y, x]
        )
        area += w * h
    return total / area


class BoostingState:
    """Incremental AdaBoost over a fixed value matrix.

    Running more rounds on an existing state is identical to retraining from
    scratch with a larger round count, which is what lets cascade stages grow
    until they hit their goals without redundant work.
    """

    def __init__(self, values: np.ndarray, labels: np.ndarray):
        self.values = np.asarray(values, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        weights = np.full(len(self.labels), 1.0 / len(self.labels))
        _validate_training_input(self.labels, weights)
        self.weights = weights
        self.search = _StumpSearch(self.values, self.labels)
        self.stumps: list[tuple[int, WeakClassifier]] = []
        self.scores = np.zeros(len(self.labels))
        self.log: list[dict] = []

    def run_round(self) -> None:
        round_index = len(self.stumps) + 1
        idx, theta, pol, err = self.search.best(self.weights)
        # a stump at epsilon = 0.5 carries no information; the tolerance
        # absorbs the rounding of summed weights
        if err >= 0.5 - 1e-12:
            raise BoostingStalledError(round_index, err)
        err_c = min(max(err, _EPS_ERROR), 1.0 - _EPS_ERROR)
        alpha = float(np.log((1.0 - err_c) / err_c))
        votes = stump_predict(self.values[:, idx], theta, pol)
        correct = votes == self.labels
        self.weights = self.weights * np.where(correct, np.exp(-alpha), 1.0)
        self.weights = self.weights / self.weights.sum()
        self.stumps.append((idx, WeakClassifier(None, theta, pol, alpha)))
        self.scores = self.scores + alpha * votes
        self.log.append(
            {
                "round": round_index,
                "feature_index": idx,
                "weighted_error": err,
                "alpha": alpha,
                "weight_sum": float(self.weights.sum()),
            }
        )

    def strong_classifier(self, features) -> StrongClassifier:
        weak = tuple(
            replace(wc, feature=features[idx]) for idx, wc in self.stumps
        )
        half_alpha = 0.5 * sum(w.alpha for w in weak)
        return StrongClassifier(weak, half_alpha, tuple(self.log))


def adaboost_train(
    samples, labels, feature_set, rounds: int
) -> StrongClassifier:
    """Boost decision stumps over a feature set for a fixed number of rounds.

    samples are base-window integral images; labels are 0/1 with both classes
    present. Raises BoostingStalledError if some round cannot find a stump
    with weighted error below 0.5.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    labels = np.asarray(labels, dtype=np.int64)
    values = feature_value_matrix(samples, feature_set)
    state = BoostingState(values, labels)
    for _ in range(rounds):
        state.run_round()
    return state.strong_classifier(list(feature_set))


def strong_scores(classifier: StrongClassifier, values: np.ndarray, feature_index) -> np.ndarray:
    """Vote totals for rows of a feature value matrix.

    feature_index maps a HaarFeature to its column in the matrix.
    """
    scores = np.zeros(values.shape[0])
    for wc in classifier.weak:
        col = feature_index[wc.feature]
        scores += wc.alpha * stump_predict(values[:, col], wc.threshold, wc.polarity)
    return scores
