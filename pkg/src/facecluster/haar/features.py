"""Haar-like rectangle features and their responses.

A feature's response is the difference of region MEANS,

    value = sum(dark) / count(dark) - sum(light) / count(light),

not the weighted pixel-sum difference some detectors use. Means make the
response magnitude independent of window scale, so thresholds learned on the
base window transfer directly to scaled scan windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ..imaging import IntegralImage, Rect, rect_sum

BASE_WINDOW = 24


class HaarKind(str, Enum):
    TWO_RECT_HORIZONTAL = "two-rect-horizontal"
    TWO_RECT_VERTICAL = "two-rect-vertical"
    THREE_RECT_HORIZONTAL = "three-rect-horizontal"
    THREE_RECT_VERTICAL = "three-rect-vertical"
    FOUR_RECT_CHECKER = "four-rect-checker"


# (horizontal band count, vertical band count) per kind; the footprint width
# must divide by the first, the height by the second.
BAND_COUNTS = {
    HaarKind.TWO_RECT_HORIZONTAL: (2, 1),
    HaarKind.TWO_RECT_VERTICAL: (1, 2),
    HaarKind.THREE_RECT_HORIZONTAL: (3, 1),
    HaarKind.THREE_RECT_VERTICAL: (1, 3),
    HaarKind.FOUR_RECT_CHECKER: (2, 2),
}

KIND_ORDER = (
    HaarKind.TWO_RECT_HORIZONTAL,
    HaarKind.TWO_RECT_VERTICAL,
    HaarKind.THREE_RECT_HORIZONTAL,
    HaarKind.THREE_RECT_VERTICAL,
    HaarKind.FOUR_RECT_CHECKER,
)


@dataclass(frozen=True)
class HaarFeature:
    """Template placed at (x, y) with total footprint (w, h) in the base window."""

    kind: HaarKind
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        cx, cy = BAND_COUNTS[self.kind]
        if self.x < 0 or self.y < 0:
            raise ValueError(f"feature origin must be nonnegative: ({self.x}, {self.y})")
        if self.w < cx or self.w % cx != 0:
            raise ValueError(f"width {self.w} not a positive multiple of {cx}")
        if self.h < cy or self.h % cy != 0:
            raise ValueError(f"height {self.h} not a positive multiple of {cy}")


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def _band_rects(kind: HaarKind, x: int, y: int, bw: int, bh: int):
    """Dark and light rectangles for a footprint whose bands are bw x bh.

    Dark regions by convention: left band (two-rect-horizontal), top band
    (two-rect-vertical), middle band (three-rect kinds), and the top-left
    plus bottom-right cells of the checker. Stump polarity absorbs the sign,
    so the convention only needs to be fixed, not "right".
    """
    if kind is HaarKind.TWO_RECT_HORIZONTAL:
        dark = [(x, y, bw, bh)]
        light = [(x + bw, y, bw, bh)]
    elif kind is HaarKind.TWO_RECT_VERTICAL:
        dark = [(x, y, bw, bh)]
        light = [(x, y + bh, bw, bh)]
    elif kind is HaarKind.THREE_RECT_HORIZONTAL:
        dark = [(x + bw, y, bw, bh)]
        light = [(x, y, bw, bh), (x + 2 * bw, y, bw, bh)]
    elif kind is HaarKind.THREE_RECT_VERTICAL:
        dark = [(x, y + bh, bw, bh)]
        light = [(x, y, bw, bh), (x, y + 2 * bh, bw, bh)]
    elif kind is HaarKind.FOUR_RECT_CHECKER:
        dark = [(x, y, bw, bh), (x + bw, y + bh, bw, bh)]
        light = [(x + bw, y, bw, bh), (x, y + bh, bw, bh)]
    else:  # pragma: no cover
        raise ValueError(f"unknown kind {kind}")
    return dark, light


def scaled_regions(
    feature: HaarFeature,
    window: Rect,
    scale: float = 1.0,
    *,
    shrink_to_fit: bool = False,
):
    """Dark/light rectangles of a feature placed in a scan window.

    Band extents are rounded per band and multiplied back by the band count,
    so the regions always tile the scaled footprint exactly. When rounding
    pushes the footprint past the window edge, shrink_to_fit=True trims one
    band unit at a time (the detector's behavior); otherwise it is an error.
    """
    cx, cy = BAND_COUNTS[feature.kind]
    ubw = feature.w // cx
    ubh = feature.h // cy
    bw = max(1, _round_half_up(ubw * scale))
    bh = max(1, _round_half_up(ubh * scale))
    ox = window.x + _round_half_up(feature.x * scale)
    oy = window.y + _round_half_up(feature.y * scale)

    if shrink_to_fit:
        while bw > 1 and ox + bw * cx > window.x + window.w:
            bw -= 1
        while bh > 1 and oy + bh * cy > window.y + window.h:
            bh -= 1
    if ox + bw * cx > window.x + window.w or oy + bh * cy > window.y + window.h:
        raise ValueError(
            f"scaled footprint {bw * cx}x{bh * cy} at ({ox},{oy}) overflows window "
            f"({window.x},{window.y},{window.w},{window.h})"
        )
    return _band_rects(feature.kind, ox, oy, bw, bh)


def haar_value(
    ii: IntegralImage, feature: HaarFeature, window: Rect, window_scale: float = 1.0
) -> float:
    """Mean(dark) - mean(light) for the feature scaled into the given window."""
    dark, light = scaled_regions(feature, window, window_scale)
    dark_sum = sum(rect_sum(ii, Rect(*r)) for r in dark)
    light_sum = sum(rect_sum(ii, Rect(*r)) for r in light)
    dark_count = sum(r[2] * r[3] for r in dark)
    light_count = sum(r[2] * r[3] for r in light)
    return dark_sum / dark_count - light_sum / light_count


def enumerate_features(
    base_window: int = BASE_WINDOW,
    position_stride: int = 1,
    size_stride: int = 1,
) -> list[HaarFeature]:
    """Every feature of every kind on the stride lattice that fits the window.

    Enumeration order is fixed (kind, then y, x, h, w) so repeated calls,
    serialized models, and parallel training runs all agree on indices.
    Strides step the origin lattice and the per-band size lattice; strides of
    (1, 1) enumerate the complete set (162336 features for a 24 px window).
    """
    if position_stride < 1 or size_stride < 1:
        raise ValueError("strides must be >= 1")
    features = []
    for kind in KIND_ORDER:
        cx, cy = BAND_COUNTS[kind]
        for y in range(0, base_window, position_stride):
            for x in range(0, base_window, position_stride):
                for ubh in range(1, base_window + 1, size_stride):
                    h = ubh * cy
                    if y + h > base_window:
                        break
                    for ubw in range(1, base_window + 1, size_stride):
                        w = ubw * cx
                        if x + w > base_window:
                            break
                        features.append(HaarFeature(kind, x, y, w, h))
    return features
