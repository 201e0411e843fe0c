"""Shared fixtures: trained cascade, synthetic corpora, and PNG corpus dirs.

Heavyweight artifacts are session-scoped; everything is seeded so every test
run sees identical data.
"""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

import facecluster as fc
from facecluster.synth import band_corpus, band_face_window, scene_corpus

TRAIN_SEED = 11
HOLDOUT_SEED = 1011
SCENE_SEED = 21


def save_png(img: fc.GrayImage, path) -> None:
    arr = np.clip(np.floor(img.pixels + 0.5), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


@pytest.fixture(scope="session")
def feature_set():
    return fc.enumerate_features(24, position_stride=2, size_stride=2)


@pytest.fixture(scope="session")
def train_corpus():
    return band_corpus(100, 100, seed=TRAIN_SEED)


@pytest.fixture(scope="session")
def holdout_corpus():
    return band_corpus(100, 100, seed=HOLDOUT_SEED)


@pytest.fixture(scope="session")
def cascade(feature_set, train_corpus):
    positives, negatives = train_corpus
    return fc.train_cascade(
        positives, negatives, feature_set=feature_set, seed=TRAIN_SEED
    )


@pytest.fixture(scope="session")
def scenes():
    return scene_corpus(120, seed=SCENE_SEED)


@pytest.fixture(scope="session")
def window_dirs(tmp_path_factory, train_corpus):
    """Positive/negative training windows saved as PNG directories."""
    root = tmp_path_factory.mktemp("windows")
    pos_dir = root / "positives"
    neg_dir = root / "negatives"
    pos_dir.mkdir()
    neg_dir.mkdir()
    positives, negatives = train_corpus
    for i, w in enumerate(positives):
        save_png(w, pos_dir / f"pos{i:03d}.png")
    for i, w in enumerate(negatives):
        save_png(w, neg_dir / f"neg{i:03d}.png")
    return pos_dir, neg_dir


@pytest.fixture(scope="session")
def scene_dir(tmp_path_factory, scenes):
    """Planted scenes as PNGs, with ground truth recoverable from filenames."""
    root = tmp_path_factory.mktemp("scenes")
    truths = {}
    for i, (img, truth, template) in enumerate(scenes):
        name = f"t{template}_scene{i:03d}.png"
        save_png(img, root / name)
        truths[name] = (truth, template)
    return root, truths


@pytest.fixture(scope="session")
def faces_dir(tmp_path_factory):
    """120 clean 224x224 template faces for the clustering stage."""
    root = tmp_path_factory.mktemp("faces")
    rng = np.random.default_rng(5)
    for i in range(120):
        template = i % 4
        img = band_face_window(rng, template=template, size=224)
        save_png(img, root / f"t{template}_face{i:03d}.png")
    return root


def box_iou(a: fc.Rect, b: fc.Rect) -> float:
    ix = max(0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    union = a.w * a.h + b.w * b.h - inter
    return inter / union if union else 0.0
