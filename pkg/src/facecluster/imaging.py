"""Image decoding, resizing, flattening, and integral images.

Intensities are kept as float64 in [0, 255] throughout; statistical scaling
is deliberately left to the dimensionality-reduction stage so pixels are
never normalized twice. Integral sums are exact for integer-valued rasters
(all partial sums stay far below 2**53), which makes rectangle sums agree
with a naive double loop to the last bit.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DecodeError

# Rec.601 luma weights, used because the source material only asks for
# "grayscale" and these are the standard reproducible choice.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

# Pipeline-standard face crop side length; flattened length is its square.
FACE_SIZE = 224

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Single-channel raster, shape (height, width), float64 in [0, 255]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError(f"pixels must be a nonempty 2-D array, got shape {px.shape}")
        lo, hi = px.min(), px.max()
        if lo < 0.0 or hi > 255.0:
            raise ValueError(f"intensities must lie in [0, 255], got [{lo}, {hi}]")
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, eq=False)
class IntegralImage:
    """Prefix-sum raster: sums[y, x] = sum of pixels (i <= x, j <= y)."""

    sums: np.ndarray

    def __post_init__(self):
        s = np.array(self.sums, dtype=np.float64)
        if s.ndim != 2 or s.size == 0:
            raise ValueError(f"sums must be a nonempty 2-D array, got shape {s.shape}")
        s.flags.writeable = False
        object.__setattr__(self, "sums", s)

    @property
    def width(self) -> int:
        return self.sums.shape[1]

    @property
    def height(self) -> int:
        return self.sums.shape[0]

    @cached_property
    def padded(self) -> np.ndarray:
        """(h+1, w+1) copy with a zero top row and left column.

        Lets rectangle sums index corners without branching on -1.
        """
        h, w = self.sums.shape
        p = np.zeros((h + 1, w + 1))
        p[1:, 1:] = self.sums
        p.flags.writeable = False
        return p


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle: top-left (x, y), extents (w, h)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"rect extents must be >= 1, got w={self.w} h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"rect origin must be nonnegative, got ({self.x}, {self.y})")

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Flat pixel vector plus the identifier of the image it came from."""

    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError(f"values must be 1-D, got shape {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def decode_to_gray(data: bytes, source: str = "<bytes>") -> GrayImage:
    """Decode a PNG or JPEG payload to grayscale.

    Luminance is 0.299 R + 0.587 G + 0.114 B per pixel, computed in float64
    (no uint8 rounding), clamped to [0, 255].
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            rgb = im.convert("RGB")
    except Exception as exc:
        raise DecodeError(f"cannot decode image {source!r}: {exc}") from exc
    arr = np.asarray(rgb, dtype=np.float64)
    lum = arr @ LUMA_WEIGHTS
    np.clip(lum, 0.0, 255.0, out=lum)
    return GrayImage(lum)


def load_gray(path) -> GrayImage:
    path = Path(path)
    return decode_to_gray(path.read_bytes(), source=str(path))


def list_images(directory) -> list[Path]:
    """All PNG/JPEG files under a directory, in lexicographic path order.

    The sort key is the posix-style relative path string, so manifests are
    deterministic across platforms and independent of filesystem order.
    """
    directory = Path(directory)
    paths = [
        p
        for p in directory.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    ]
    return sorted(paths, key=lambda p: p.relative_to(directory).as_posix())


def _axis_coords(src_n: int, out_n: int) -> np.ndarray:
    # Align-corners mapping; a single output sample lands on the source center.
    if out_n == 1:
        return np.array([(src_n - 1) / 2.0])
    coords = np.arange(out_n) * ((src_n - 1) / (out_n - 1))
    return np.clip(coords, 0.0, src_n - 1)


def resize_bilinear(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """Bilinear resize with edge clamping.

    Output corners coincide with input corners, so resizing an image to its
    own size reproduces it exactly.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {out_w}x{out_h}")
    src = img.pixels
    sh, sw = src.shape
    if (out_w, out_h) == (sw, sh):
        return GrayImage(src)

    xs = _axis_coords(sw, out_w)
    ys = _axis_coords(sh, out_h)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, sw - 1)
    y1 = np.minimum(y0 + 1, sh - 1)
    fx = xs - x0
    fy = ys - y0

    top = src[np.ix_(y0, x0)] * (1.0 - fx) + src[np.ix_(y0, x1)] * fx
    bot = src[np.ix_(y1, x0)] * (1.0 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1.0 - fy)[:, None] + bot * fy[:, None]
    np.clip(out, 0.0, 255.0, out=out)
    return GrayImage(out)


def flatten(img: GrayImage, provenance: str = "") -> FeatureVector:
    """Row-major flattening; values are untouched."""
    return FeatureVector(img.pixels.reshape(-1), provenance)


def unflatten(vec: FeatureVector, width: int, height: int) -> GrayImage:
    if vec.values.size != width * height:
        raise ValueError(
            f"vector length {vec.values.size} does not match {width}x{height}"
        )
    return GrayImage(vec.values.reshape(height, width))


def integral_image(img: GrayImage) -> IntegralImage:
    """Cumulative sums realizing ii(x,y) = p + ii(x-1,y) + ii(x,y-1) - ii(x-1,y-1).

    Computed as a row cumsum followed by a column cumsum; for integer-valued
    pixels this equals the recurrence exactly.
    """
    sums = np.cumsum(np.cumsum(img.pixels, axis=0), axis=1)
    return IntegralImage(sums)


def rect_sum(ii: IntegralImage, r: Rect) -> float:
    """Sum of pixels inside a rectangle via the four-corner lookup D - B - C + A."""
    if r.x + r.w > ii.width or r.y + r.h > ii.height:
        raise ValueError(
            f"rect ({r.x},{r.y},{r.w},{r.h}) exceeds image {ii.width}x{ii.height}"
        )
    p = ii.padded
    return float(
        p[r.y + r.h, r.x + r.w] - p[r.y, r.x + r.w] - p[r.y + r.h, r.x] + p[r.y, r.x]
    )


def squared_integral(img: GrayImage) -> np.ndarray:
    """Padded (h+1, w+1) prefix sums of squared pixels, for window variance."""
    h, w = img.pixels.shape
    p = np.zeros((h + 1, w + 1))
    p[1:, 1:] = np.cumsum(np.cumsum(img.pixels * img.pixels, axis=0), axis=1)
    return p
