"""Multi-scale sliding-window detection with box grouping.

Windows are scanned at geometrically growing sizes; a raw hit must pass
every cascade stage. Raw hits are grouped by IoU with union-find (so the
grouping is independent of evaluation order), each group is averaged into
one box, and sparse groups are dropped via min_neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..imaging import GrayImage, Rect, integral_image, resize_bilinear, squared_integral
from .cascade import Cascade
from .features import scaled_regions


@dataclass(frozen=True)
class ScanParams:
    scale_factor: float = 1.25
    step_fraction: float = 1.0 / 12.0
    min_neighbors: int = 3
    iou_merge_threshold: float = 0.3

    def __post_init__(self):
        if not self.scale_factor > 1.0:
            raise ValueError(f"scale_factor must be > 1, got {self.scale_factor}")
        if not (0.0 < self.step_fraction <= 1.0):
            raise ValueError(f"step_fraction must be in (0, 1], got {self.step_fraction}")
        if self.min_neighbors < 0:
            raise ValueError(f"min_neighbors must be >= 0, got {self.min_neighbors}")
        if not (0.0 < self.iou_merge_threshold < 1.0):
            raise ValueError(
                f"iou_merge_threshold must be in (0, 1), got {self.iou_merge_threshold}"
            )


@dataclass(frozen=True)
class Detection:
    box: Rect
    scale: float
    score: float
    neighbors: int

    def __post_init__(self):
        if self.neighbors < 1:
            raise ValueError(f"neighbors must be >= 1, got {self.neighbors}")


def _window_sizes(base: int, scale_factor: float, limit: int) -> list[int]:
    sizes = []
    i = 0
    while True:
        size = int(np.floor(base * scale_factor**i + 0.5))
        if size > limit:
            break
        if not sizes or size != sizes[-1]:
            sizes.append(size)
        i += 1
    return sizes


def _region_terms(feature, scale, wsize):
    """Window-relative corner offsets and the 1/area coefficient per region."""
    window = Rect(0, 0, wsize, wsize)
    dark, light = scaled_regions(feature, window, scale, shrink_to_fit=True)
    terms = []
    for rects, sign in ((dark, 1.0), (light, -1.0)):
        area = sum(w * h for _, _, w, h in rects)
        for x, y, w, h in rects:
            terms.append((x, y, w, h, sign / area))
    return terms


def _scan_scale(padded, padded_sq, cascade, wsize, step, normalize):
    img_h = padded.shape[0] - 1
    img_w = padded.shape[1] - 1
    ys = np.arange(0, img_h - wsize + 1, step)
    xs = np.arange(0, img_w - wsize + 1, step)
    if len(ys) == 0 or len(xs) == 0:
        return np.empty((0, 2), dtype=np.intp), np.empty(0)
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    wy = gy.reshape(-1)
    wx = gx.reshape(-1)

    sigma = None
    if normalize:
        area = wsize * wsize
        s1 = (
            padded[wy + wsize, wx + wsize]
            - padded[wy, wx + wsize]
            - padded[wy + wsize, wx]
            + padded[wy, wx]
        )
        s2 = (
            padded_sq[wy + wsize, wx + wsize]
            - padded_sq[wy, wx + wsize]
            - padded_sq[wy + wsize, wx]
            + padded_sq[wy, wx]
        )
        var = np.maximum(s2 / area - (s1 / area) ** 2, 0.0)
        sigma = np.sqrt(var)
        sigma[sigma < 1e-12] = 1.0

    scale = wsize / cascade.base_window
    alive = np.arange(len(wy), dtype=np.intp)
    margins = np.zeros(0)
    for stage in cascade.stages:
        if len(alive) == 0:
            return np.empty((0, 2), dtype=np.intp), np.empty(0)
        ay = wy[alive]
        ax = wx[alive]
        scores = np.zeros(len(alive))
        for wc in stage.weak_classifiers:
            value = np.zeros(len(alive))
            for rx, ry, rw, rh, coeff in _region_terms(wc.feature, scale, wsize):
                y0 = ay + ry
                x0 = ax + rx
                value += coeff * (
                    padded[y0 + rh, x0 + rw]
                    - padded[y0, x0 + rw]
                    - padded[y0 + rh, x0]
                    + padded[y0, x0]
                )
            if sigma is not None:
                value = value / sigma[alive]
            votes = wc.polarity * value >= wc.polarity * wc.threshold
            scores += wc.alpha * votes
        keep = scores >= stage.threshold
        alive = alive[keep]
        margins = scores[keep] - stage.threshold
    boxes = np.column_stack([wx[alive], wy[alive]])
    return boxes, margins


def _iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _merge_hits(raw, params: ScanParams, img_w: int, img_h: int) -> list[Detection]:
    # raw: list of (x, y, size, scale, margin); sort so grouping and averaging
    # are independent of scan order.
    raw = sorted(raw, key=lambda r: (r[3], r[0], r[1]))
    uf = _UnionFind(len(raw))
    for i in range(len(raw)):
        bi = (raw[i][0], raw[i][1], raw[i][2], raw[i][2])
        for j in range(i + 1, len(raw)):
            bj = (raw[j][0], raw[j][1], raw[j][2], raw[j][2])
            if _iou(bi, bj) >= params.iou_merge_threshold:
                uf.union(i, j)

    groups: dict[int, list[int]] = {}
    for i in range(len(raw)):
        groups.setdefault(uf.find(i), []).append(i)

    detections = []
    for root in sorted(groups):
        members = groups[root]
        if len(members) < max(params.min_neighbors, 1):
            continue
        xs = np.array([raw[i][0] for i in members], dtype=np.float64)
        ys = np.array([raw[i][1] for i in members], dtype=np.float64)
        sizes = np.array([raw[i][2] for i in members], dtype=np.float64)
        scales = np.array([raw[i][3] for i in members], dtype=np.float64)
        score = max(raw[i][4] for i in members)
        w = max(1, int(np.floor(sizes.mean() + 0.5)))
        h = w
        x = int(np.floor(xs.mean() + 0.5))
        y = int(np.floor(ys.mean() + 0.5))
        w = min(w, img_w)
        h = min(h, img_h)
        x = min(max(x, 0), img_w - w)
        y = min(max(y, 0), img_h - h)
        detections.append(
            Detection(Rect(x, y, w, h), float(scales.mean()), float(score), len(members))
        )
    detections.sort(key=lambda d: (-d.score, d.box.x, d.box.y, d.box.w, d.box.h))
    return detections


def detect(cascade: Cascade, img: GrayImage, params: ScanParams = ScanParams()) -> list[Detection]:
    """All merged face detections in an image, best score first."""
    if img.width < cascade.base_window or img.height < cascade.base_window:
        raise ValueError(
            f"image {img.width}x{img.height} is smaller than the "
            f"{cascade.base_window}px base window"
        )
    ii = integral_image(img)
    padded = ii.padded
    padded_sq = squared_integral(img) if cascade.variance_normalization else None

    raw = []
    limit = min(img.width, img.height)
    for wsize in _window_sizes(cascade.base_window, params.scale_factor, limit):
        step = max(1, int(np.floor(wsize * params.step_fraction + 0.5)))
        boxes, margins = _scan_scale(
            padded, padded_sq, cascade, wsize, step, cascade.variance_normalization
        )
        scale = wsize / cascade.base_window
        for (x, y), margin in zip(boxes, margins):
            raw.append((int(x), int(y), wsize, scale, float(margin)))
    return _merge_hits(raw, params, img.width, img.height)


def extract_face(img: GrayImage, detections, size: int = 224) -> GrayImage | None:
    """Crop of the largest detection (ties by score, then position), resized.

    Returns None when there are no detections.
    """
    if not detections:
        return None
    best = max(
        detections,
        key=lambda d: (d.box.area, d.score, -d.box.x, -d.box.y),
    )
    b = best.box
    crop = GrayImage(img.pixels[b.y : b.y + b.h, b.x : b.x + b.w])
    return resize_bilinear(crop, size, size)
