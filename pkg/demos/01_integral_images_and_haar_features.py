#!/usr/bin/env python3
"""Integral images and Haar-like features, from pixels to responses.

The whole detector rests on one trick: replace every pixel with the sum of
everything above and to its left, and any rectangle's sum costs four array
lookups. Haar features compare the mean intensity of dark and light bands,
so a feature response costs a handful of lookups no matter how big it is.
"""

import numpy as np

import facecluster as fc

# A tiny 6x6 ramp image makes the prefix sums easy to eyeball.
pixels = np.arange(36, dtype=float).reshape(6, 6)
img = fc.GrayImage(pixels)
ii = fc.integral_image(img)

print("image:")
print(pixels.astype(int))
print("\nintegral image (cumulative sums):")
print(ii.sums.astype(int))

r = fc.Rect(2, 1, 3, 4)
print(f"\nsum of rect {r}: four lookups give {fc.rect_sum(ii, r):.0f}, "
      f"direct slice gives {pixels[1:5, 2:5].sum():.0f}")

# The complete feature set for the 24px detector window.
features = fc.enumerate_features(24)
print(f"\ncomplete 24px feature set: {len(features)} features")
for kind in fc.HaarKind:
    count = sum(1 for f in features if f.kind is kind)
    print(f"  {kind.value:24s} {count:7d}")

# A feature response is mean(dark) - mean(light). On a dark-over-light band
# pattern, a two-rect-vertical feature spanning the boundary responds with
# the band contrast, regardless of how large the feature is.
band = np.empty((24, 24))
band[:12] = 60.0
band[12:] = 170.0
band_ii = fc.integral_image(fc.GrayImage(band))
window = fc.Rect(0, 0, 24, 24)

for w, h in ((4, 4), (12, 24), (24, 24)):
    f = fc.HaarFeature(fc.HaarKind.TWO_RECT_VERTICAL, 0, 0, w, h)
    value = fc.haar_value(band_ii, f, window)
    print(f"two-rect-vertical {w:2d}x{h:2d} at (0,0): response {value:8.2f}")

print("\nuniform regions cancel exactly:")
flat_ii = fc.integral_image(fc.GrayImage(np.full((24, 24), 99.0)))
f = fc.HaarFeature(fc.HaarKind.FOUR_RECT_CHECKER, 4, 4, 8, 8)
print(f"checker feature on a flat image: {fc.haar_value(flat_ii, f, window)!r}")
