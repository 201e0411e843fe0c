"""Seeded synthetic corpora for exercising the pipeline end to end.

The stand-in "face" is a dark horizontal band over a light band, which the
cascade can learn from a couple hundred windows. Four interior variants of
that pattern give the clustering stages a known ground truth, so pipeline
accuracy can be measured without any real photographs.
"""

from __future__ import annotations

import numpy as np

from .imaging import GrayImage, Rect, resize_bilinear

TEMPLATE_COUNT = 4

# Light-band third-level codes, pairwise Hamming distance exactly 2.
_TEMPLATE_CODES = (
    (+1, +1, +1),
    (+1, -1, -1),
    (-1, +1, -1),
    (-1, -1, +1),
)


def _clip_image(arr: np.ndarray) -> GrayImage:
    return GrayImage(np.clip(arr, 0.0, 255.0))


def band_face_window(rng: np.random.Generator, template: int = 0,
                     size: int = 24, noise: float = 8.0) -> GrayImage:
    """One positive window: dark top band over light bottom band plus noise.

    Identity is coded into the light band: its three column thirds sit 12
    levels above or below the 170 base according to a binary code with
    pairwise Hamming distance 2, so the four templates are equidistant in
    pixel space (no hierarchical cluster structure) and the coding regions
    are large enough to survive crop misalignment. The dark-over-light band
    contrast itself is nearly identical across templates, so detection
    quality cannot leak template identity.
    """
    if not (0 <= template < TEMPLATE_COUNT):
        raise ValueError(f"template must be in [0, {TEMPLATE_COUNT}), got {template}")
    half = size // 2
    img = np.empty((size, size))
    img[:half] = 60.0
    code = _TEMPLATE_CODES[template]
    third = size / 3.0
    for region in range(3):
        c0 = int(round(region * third))
        c1 = int(round((region + 1) * third))
        img[half:, c0:c1] = 170.0 + 12.0 * code[region]
    _add_margins(img, size)
    img += rng.normal(0.0, noise, size=(size, size))
    return _clip_image(img)


def _add_margins(img: np.ndarray, size: int) -> None:
    """Dark full-height side margins (hair framing the face).

    They break horizontal slide-invariance: a window offset sideways from a
    pattern sees margins at the wrong columns, so learned features reject it
    and detections stay centered.
    """
    mw = max(2, int(round(size / 8.0)))
    img[:, :mw] = 60.0
    img[:, size - mw :] = 60.0


def negative_window(rng: np.random.Generator, size: int = 24, noise: float = 8.0) -> GrayImage:
    """One non-face window drawn from a seeded mix of textures.

    Roughly half the draws are near-face patterns with randomized geometry:
    weak bands, shifted boundaries, template-code violations, and faces with
    a light gap through the dark band. The gap-hair kind is what keeps
    single narrow features from separating the classes (each column is
    face-like in some negative), so training must prefer wide features and
    grow more than one stage.
    """
    kind = int(rng.choice(9, p=[0.10, 0.10, 0.10, 0.10, 0.10, 0.08, 0.12, 0.14, 0.16]))
    half = size // 2
    if kind == 0:  # flat
        img = np.full((size, size), float(rng.uniform(40.0, 220.0)))
    elif kind == 1:  # horizontal gradient
        a, b = rng.uniform(30.0, 230.0, size=2)
        img = np.tile(np.linspace(a, b, size), (size, 1))
    elif kind == 2:  # inverted bands (light over dark)
        img = np.empty((size, size))
        img[:half] = 180.0
        img[half:] = 70.0
    elif kind == 3:  # vertical bands (dark left, light right)
        img = np.empty((size, size))
        img[:, :half] = 70.0
        img[:, half:] = 180.0
    elif kind == 4:  # pure noise
        img = rng.uniform(0.0, 255.0, size=(size, size))
    elif kind == 5:  # weak-contrast band pair
        top = rng.uniform(90.0, 130.0)
        img = np.empty((size, size))
        img[:half] = top
        img[half:] = top + rng.uniform(10.0, 45.0)
        _add_margins(img, size)
    elif kind == 6:  # band boundary at a random wrong height
        margin = max(2, size // 8)
        choices = list(range(margin, half - 2)) + list(range(half + 3, size - margin))
        split = int(choices[rng.integers(len(choices))])
        img = np.empty((size, size))
        img[:split] = rng.uniform(50.0, 80.0)
        img[split:] = rng.uniform(150.0, 200.0)
        _add_margins(img, size)
    elif kind == 7:  # near-face: proper bands, light-band thirds off the code range
        img = np.empty((size, size))
        img[:half] = 60.0
        third = size / 3.0
        levels = 170.0 + rng.choice([-45.0, 45.0], size=3) * rng.uniform(0.8, 1.3, size=3)
        for region in range(3):
            c0 = int(round(region * third))
            c1 = int(round((region + 1) * third))
            img[half:, c0:c1] = levels[region]
        _add_margins(img, size)
    else:  # near-face: a light vertical gap through the dark band
        img = np.empty((size, size))
        img[:half] = 60.0
        img[half:] = 170.0
        gw = int(rng.integers(size // 4, size // 2))
        gx = int(rng.integers(0, size - gw + 1))
        img[:half, gx : gx + gw] = rng.uniform(160.0, 200.0)
        _add_margins(img, size)
    img = img + rng.normal(0.0, noise, size=(size, size))
    return _clip_image(img)


def band_corpus(n_pos: int, n_neg: int, seed: int = 0, size: int = 24,
                templates=None, scale_jitter: int = 7) -> tuple[list[GrayImage], list[GrayImage]]:
    """Labeled window sets for cascade training or evaluation.

    Positives are rendered at a jittered size and resized back down, which
    reproduces the band smearing a multi-scale scanner sees between its
    discrete scales; training on it makes detections tolerant of off-grid
    pattern sizes.
    """
    rng = np.random.default_rng(seed)
    if templates is None:
        templates = list(range(TEMPLATE_COUNT))
    positives = []
    for i in range(n_pos):
        render = size + int(rng.integers(0, scale_jitter))
        window = band_face_window(rng, template=templates[i % len(templates)], size=render)
        if render != size:
            window = resize_bilinear(window, size, size)
        positives.append(window)
    negatives = [negative_window(rng, size=size) for _ in range(n_neg)]
    return positives, negatives


def planted_scene(
    rng: np.random.Generator,
    template: int = 0,
    scene_size: int = 64,
    pattern_size: int | None = None,
) -> tuple[GrayImage, Rect]:
    """A scene with one planted face pattern; returns the image and truth box.

    The background is a gentle light-over-dark vertical gradient: windows
    mixing pattern and background see their band contrast diluted toward
    positive values and get rejected, so hits concentrate on the pattern
    itself. Default pattern sizes stay within one scale octave of the 24 px
    base window; beyond that, sub-window hits on the band pattern start to
    dominate the merged box and drag it off the truth.
    """
    if pattern_size is None:
        pattern_size = int(rng.integers(24, min(33, scene_size - 2)))
    top = rng.uniform(170.0, 200.0)
    bottom = rng.uniform(100.0, 140.0)
    background = np.tile(np.linspace(top, bottom, scene_size)[:, None], (1, scene_size))
    background += rng.normal(0.0, 4.0, size=(scene_size, scene_size))

    window = band_face_window(rng, template=template)
    pattern = resize_bilinear(window, pattern_size, pattern_size)
    x = int(rng.integers(0, scene_size - pattern_size + 1))
    y = int(rng.integers(0, scene_size - pattern_size + 1))
    background[y : y + pattern_size, x : x + pattern_size] = pattern.pixels
    return _clip_image(background), Rect(x, y, pattern_size, pattern_size)


def scene_corpus(n: int, seed: int = 0, scene_size: int = 64,
                 templates=None) -> list[tuple[GrayImage, Rect, int]]:
    """Scenes with ground truth: (image, truth box, template id)."""
    rng = np.random.default_rng(seed)
    if templates is None:
        templates = list(range(TEMPLATE_COUNT))
    out = []
    for i in range(n):
        template = templates[i % len(templates)]
        img, truth = planted_scene(rng, template=template, scene_size=scene_size)
        out.append((img, truth, template))
    return out


def gaussian_blobs(
    n_per_blob: int,
    centers: np.ndarray,
    spread: float,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussian blobs: (samples, true blob labels)."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=np.float64)
    xs = []
    labels = []
    for j, c in enumerate(centers):
        xs.append(c + rng.normal(0.0, spread, size=(n_per_blob, centers.shape[1])))
        labels.extend([j] * n_per_blob)
    return np.vstack(xs), np.array(labels, dtype=np.int64)


def separated_blob_centers(k: int, dims: int, separation: float) -> np.ndarray:
    """k centers placed separation apart along the axes (pairwise >= separation)."""
    centers = np.zeros((k, dims))
    for j in range(k):
        centers[j, j % dims] = separation * (1 + j // dims)
        if j % 2 == 1:
            centers[j] = -centers[j]
    return centers
