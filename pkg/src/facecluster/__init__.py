"""facecluster: unsupervised face clustering built from first principles.

The pipeline detects faces with a from-scratch boosted Haar cascade, reduces
the 224x224 crops with PCA (Gram-matrix path for wide data), discovers the
cluster count with elbow and silhouette analysis, clusters with k-means, and
trains a small MLP so new faces can be assigned to the discovered clusters.
"""

__version__ = "0.1.0"

from .imaging import (
    FACE_SIZE,
    FeatureVector,
    GrayImage,
    IntegralImage,
    Rect,
    decode_to_gray,
    flatten,
    integral_image,
    list_images,
    load_gray,
    rect_sum,
    resize_bilinear,
    unflatten,
)
from .haar import (
    BASE_WINDOW,
    Cascade,
    Detection,
    HaarFeature,
    HaarKind,
    ScanParams,
    Stage,
    StrongClassifier,
    WeakClassifier,
    adaboost_train,
    classify_windows,
    detect,
    enumerate_features,
    extract_face,
    haar_value,
    load_cascade,
    save_cascade,
    train_cascade,
    train_stump,
)
from .pca import (
    PcaModel,
    StandardizationParams,
    covariance,
    eigendecompose,
    explained_variance,
    fit_pca,
    fit_standardizer,
    load_pca,
    project,
    reconstruct,
    save_pca,
    standardize,
)
from .kmeans import (
    Assignment,
    KMeansModel,
    assign,
    assign_all,
    kmeans_fit,
    load_kmeans,
    save_kmeans,
    sse,
)
from .model_select import (
    ElbowCurve,
    KSelection,
    SilhouetteReport,
    elbow_curve,
    select_k,
    silhouette_report,
    silhouette_sample,
    suggest_knee,
)
from .mlp import (
    EvalMetrics,
    MlpModel,
    TrainConfig,
    forward,
    grad_check,
    load_mlp,
    mlp_init,
    save_mlp,
)
from .mlp import train as train_mlp
from .errors import (
    BoostingStalledError,
    CascadeTrainingError,
    ConfigError,
    DecodeError,
    DegenerateInputError,
    FaceClusterError,
    SplitError,
    UndefinedSilhouetteError,
)
