from .features import (
    BASE_WINDOW,
    HaarFeature,
    HaarKind,
    enumerate_features,
    haar_value,
    scaled_regions,
)
from .boosting import (
    StrongClassifier,
    WeakClassifier,
    adaboost_train,
    feature_value_matrix,
    stump_predict,
    train_stump,
)
from .cascade import (
    Cascade,
    Stage,
    classify_windows,
    load_cascade,
    save_cascade,
    train_cascade,
)
from .detection import Detection, ScanParams, detect, extract_face

__all__ = [
    "BASE_WINDOW",
    "HaarFeature",
    "HaarKind",
    "enumerate_features",
    "haar_value",
    "scaled_regions",
    "StrongClassifier",
    "WeakClassifier",
    "adaboost_train",
    "feature_value_matrix",
    "stump_predict",
    "train_stump",
    "Cascade",
    "Stage",
    "classify_windows",
    "load_cascade",
    "save_cascade",
    "train_cascade",
    "Detection",
    "ScanParams",
    "detect",
    "extract_face",
]
