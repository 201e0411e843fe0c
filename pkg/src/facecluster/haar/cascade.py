"""Cascade training and serialization.

Stages are added greedily. Each stage is boosted one round at a time; after
every round the stage threshold is dropped to the highest value that still
passes the required fraction of positives, and the stage is closed as soon
as its false-positive rate on the negatives that survived all earlier stages
reaches the per-stage goal. Windows must pass every stage to be accepted, so
cumulative false positives shrink multiplicatively while per-stage detection
stays near one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import BoostingStalledError, CascadeTrainingError
from ..imaging import GrayImage, integral_image
from ..ioutil import read_json, write_json
from .boosting import BoostingState, WeakClassifier, feature_value_matrix, stump_predict
from .features import BASE_WINDOW, HaarFeature, HaarKind, enumerate_features

CASCADE_SCHEMA_VERSION = 1

DEFAULT_DETECTION_RATE = 0.99
DEFAULT_MAX_FALSE_POSITIVE = 0.5
DEFAULT_MAX_STAGES = 8
DEFAULT_MAX_ROUNDS_PER_STAGE = 40


@dataclass(frozen=True)
class Stage:
    weak_classifiers: tuple[WeakClassifier, ...]
    threshold: float

    def __post_init__(self):
        if not self.weak_classifiers:
            raise ValueError("a stage needs at least one weak classifier")


@dataclass(frozen=True, eq=False)
class Cascade:
    base_window: int
    stages: tuple[Stage, ...]
    variance_normalization: bool = False
    training_metadata: dict = field(default_factory=dict)


def stage_threshold_for_detection(scores: np.ndarray, detection_rate: float) -> float:
    """Highest threshold passing at least the requested fraction of positives.

    Sorts positive stage scores and takes the ceil((1-d)*N)-th lowest (at
    least the lowest), so the achieved detection rate is >= d by construction.
    """
    if len(scores) == 0:
        raise ValueError("no positive scores")
    ordered = np.sort(scores)
    idx = max(1, math.ceil((1.0 - detection_rate) * len(ordered)))
    return float(ordered[idx - 1])


def normalize_window(img: GrayImage) -> GrayImage:
    """Divide pixels by the window's population standard deviation.

    Mean differences are shift-invariant, so dividing raw pixels by sigma is
    exactly the variance normalization of the feature responses. Flat windows
    (sigma below 1e-12) are left untouched.
    """
    sigma = float(img.pixels.std())
    if sigma < 1e-12:
        return img
    scaled = img.pixels / sigma
    # Keep the raster a valid GrayImage; responses only depend on differences.
    return GrayImage(np.clip(scaled, 0.0, 255.0))


def _window_integrals(windows, base_window: int, variance_normalization: bool):
    iis = []
    for img in windows:
        if img.width != base_window or img.height != base_window:
            raise ValueError(
                f"training windows must be {base_window}x{base_window}, "
                f"got {img.width}x{img.height}"
            )
        if variance_normalization:
            img = normalize_window(img)
        iis.append(integral_image(img))
    return iis


def train_cascade(
    positives,
    negatives,
    *,
    detection_rate: float = DEFAULT_DETECTION_RATE,
    max_false_positive: float = DEFAULT_MAX_FALSE_POSITIVE,
    max_stages: int = DEFAULT_MAX_STAGES,
    max_rounds_per_stage: int = DEFAULT_MAX_ROUNDS_PER_STAGE,
    feature_set=None,
    base_window: int = BASE_WINDOW,
    variance_normalization: bool = False,
    seed: int = 0,
) -> Cascade:
    """Train a cascade from base-window GrayImage positives and negatives.

    Training itself is deterministic (stump search has fixed tie-breaking);
    the seed is recorded in the metadata for provenance of the corpus that
    produced the windows.
    """
    if len(positives) < 20 or len(negatives) < 20:
        raise ValueError(
            f"need at least 20 positives and 20 negatives, got "
            f"{len(positives)}/{len(negatives)}"
        )
    if not (0.0 < detection_rate <= 1.0):
        raise ValueError(f"detection_rate must be in (0, 1], got {detection_rate}")
    if not (0.0 < max_false_positive < 1.0):
        raise ValueError(f"max_false_positive must be in (0, 1), got {max_false_positive}")
    if max_stages < 1 or max_rounds_per_stage < 1:
        raise ValueError("stage and round limits must be >= 1")

    if feature_set is None:
        feature_set = enumerate_features(base_window, position_stride=2, size_stride=2)
    feature_set = list(feature_set)

    pos_ii = _window_integrals(positives, base_window, variance_normalization)
    neg_ii = _window_integrals(negatives, base_window, variance_normalization)
    pos_values = feature_value_matrix(pos_ii, feature_set)
    neg_values = feature_value_matrix(neg_ii, feature_set)

    pos_alive = np.arange(len(positives))
    neg_alive = np.arange(len(negatives))
    stages: list[Stage] = []
    stage_reports: list[dict] = []

    while len(stages) < max_stages and len(neg_alive) > 0:
        stage_pos = pos_values[pos_alive]
        stage_neg = neg_values[neg_alive]
        values = np.vstack([stage_pos, stage_neg])
        labels = np.concatenate(
            [np.ones(len(stage_pos), dtype=np.int64), np.zeros(len(stage_neg), dtype=np.int64)]
        )
        state = BoostingState(values, labels)

        threshold = None
        fp_rate = None
        det_rate = None
        stalled = False
        for _ in range(max_rounds_per_stage):
            try:
                state.run_round()
            except BoostingStalledError:
                stalled = True
                break
            pos_scores = state.scores[: len(stage_pos)]
            neg_scores = state.scores[len(stage_pos):]
            threshold = stage_threshold_for_detection(pos_scores, detection_rate)
            det_rate = float(np.mean(pos_scores >= threshold))
            fp_rate = float(np.mean(neg_scores >= threshold))
            if fp_rate <= max_false_positive:
                break
        report = {
            "stage": len(stages) + 1,
            "rounds": len(state.stumps),
            "threshold": threshold,
            "detection_rate": det_rate,
            "false_positive_rate": fp_rate,
            "positives": int(len(stage_pos)),
            "negatives": int(len(stage_neg)),
        }
        if threshold is None or fp_rate is None or fp_rate > max_false_positive:
            stage_reports.append(report)
            reason = "boosting stalled" if stalled else "round budget exhausted"
            raise CascadeTrainingError(
                f"stage {len(stages) + 1} missed its false-positive goal "
                f"({fp_rate} > {max_false_positive}, {reason})",
                stage_reports,
            )
        weak = tuple(
            replace(wc, feature=feature_set[idx]) for idx, wc in state.stumps
        )
        stages.append(Stage(weak, threshold))
        stage_reports.append(report)

        pos_scores = state.scores[: len(stage_pos)]
        neg_scores = state.scores[len(stage_pos):]
        pos_alive = pos_alive[pos_scores >= threshold]
        neg_alive = neg_alive[neg_scores >= threshold]
        if len(pos_alive) == 0:
            raise CascadeTrainingError("all positives rejected during training", stage_reports)

    metadata = {
        "seed": seed,
        "detection_rate_goal": detection_rate,
        "max_false_positive_goal": max_false_positive,
        "feature_count": len(feature_set),
        "positives": len(positives),
        "negatives": len(negatives),
        "stages": stage_reports,
    }
    return Cascade(
        base_window=base_window,
        stages=tuple(stages),
        variance_normalization=variance_normalization,
        training_metadata=metadata,
    )


def cascade_accepts_values(cascade: Cascade, values: np.ndarray, feature_index) -> np.ndarray:
    """Boolean acceptance per row of a base-window feature value matrix."""
    accepted = np.ones(values.shape[0], dtype=bool)
    for stage in cascade.stages:
        idx = np.flatnonzero(accepted)
        if len(idx) == 0:
            break
        scores = np.zeros(len(idx))
        for wc in stage.weak_classifiers:
            col = feature_index[wc.feature]
            scores += wc.alpha * stump_predict(values[idx, col], wc.threshold, wc.polarity)
        accepted[idx[scores < stage.threshold]] = False
    return accepted


def classify_windows(cascade: Cascade, windows) -> np.ndarray:
    """Accept/reject base-window GrayImages through every stage."""
    iis = _window_integrals(windows, cascade.base_window, cascade.variance_normalization)
    features = sorted(
        {wc.feature for stage in cascade.stages for wc in stage.weak_classifiers},
        key=lambda f: (f.kind.value, f.y, f.x, f.h, f.w),
    )
    values = feature_value_matrix(iis, features)
    index = {f: i for i, f in enumerate(features)}
    return cascade_accepts_values(cascade, values, index)


def cascade_to_dict(cascade: Cascade) -> dict:
    return {
        "schema_version": CASCADE_SCHEMA_VERSION,
        "base_window": cascade.base_window,
        "variance_normalization": cascade.variance_normalization,
        "stages": [
            {
                "threshold": stage.threshold,
                "weak": [
                    {
                        "kind": wc.feature.kind.value,
                        "x": wc.feature.x,
                        "y": wc.feature.y,
                        "w": wc.feature.w,
                        "h": wc.feature.h,
                        "threshold": wc.threshold,
                        "polarity": wc.polarity,
                        "alpha": wc.alpha,
                    }
                    for wc in stage.weak_classifiers
                ],
            }
            for stage in cascade.stages
        ],
        "training_metadata": cascade.training_metadata,
    }


def cascade_from_dict(doc: dict) -> Cascade:
    if doc.get("schema_version") != CASCADE_SCHEMA_VERSION:
        raise ValueError(f"unsupported cascade schema_version {doc.get('schema_version')!r}")
    stages = tuple(
        Stage(
            tuple(
                WeakClassifier(
                    HaarFeature(HaarKind(w["kind"]), w["x"], w["y"], w["w"], w["h"]),
                    w["threshold"],
                    w["polarity"],
                    w["alpha"],
                )
                for w in s["weak"]
            ),
            s["threshold"],
        )
        for s in doc["stages"]
    )
    return Cascade(
        base_window=doc["base_window"],
        stages=stages,
        variance_normalization=doc["variance_normalization"],
        training_metadata=doc.get("training_metadata", {}),
    )


def save_cascade(cascade: Cascade, path) -> None:
    write_json(path, cascade_to_dict(cascade))


def load_cascade(path) -> Cascade:
    return cascade_from_dict(read_json(path))
