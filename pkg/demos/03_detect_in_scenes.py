#!/usr/bin/env python3
"""Multi-scale sliding-window detection with box grouping.

Scenes contain one planted face pattern at a random size and position. The
detector scans windows at geometrically growing scales, keeps those passing
every cascade stage, merges overlapping raw hits, and discards merged boxes
with too few supporters.
"""

from pathlib import Path

import numpy as np
from PIL import Image

import facecluster as fc
from facecluster.synth import band_corpus, scene_corpus

OUT = Path(__file__).parent / "output" / "detection"
OUT.mkdir(parents=True, exist_ok=True)

positives, negatives = band_corpus(100, 100, seed=11)
features = fc.enumerate_features(24, position_stride=2, size_stride=2)
cascade = fc.train_cascade(positives, negatives, feature_set=features, seed=11)

scenes = scene_corpus(12, seed=77)
params = fc.ScanParams()  # scale 1.25, step 1/12 window, 3 neighbors, IoU 0.3


def iou(a, b):
    ix = max(0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    return inter / (a.w * a.h + b.w * b.h - inter)


for i, (img, truth, template) in enumerate(scenes):
    detections = fc.detect(cascade, img, params)
    if not detections:
        print(f"scene {i:2d}: no detection (truth at ({truth.x},{truth.y}) size {truth.w})")
        continue
    best = detections[0]
    print(
        f"scene {i:2d}: box ({best.box.x:2d},{best.box.y:2d}) size {best.box.w}, "
        f"truth size {truth.w}, IoU {iou(best.box, truth):.2f}, "
        f"{best.neighbors} raw hits merged, score {best.score:.1f}"
    )

    # save an annotated copy: white frame around the detection
    canvas = np.clip(np.floor(img.pixels + 0.5), 0, 255).astype(np.uint8)
    b = best.box
    canvas[b.y, b.x : b.x + b.w] = 255
    canvas[min(b.y + b.h - 1, img.height - 1), b.x : b.x + b.w] = 255
    canvas[b.y : b.y + b.h, b.x] = 255
    canvas[b.y : b.y + b.h, min(b.x + b.w - 1, img.width - 1)] = 255
    Image.fromarray(canvas, mode="L").save(OUT / f"scene_{i:02d}.png")

    face = fc.extract_face(img, detections)
    Image.fromarray(
        np.clip(np.floor(face.pixels + 0.5), 0, 255).astype(np.uint8), mode="L"
    ).save(OUT / f"face_{i:02d}.png")

print(f"\nannotated scenes and 224x224 crops written to {OUT}")

flat = fc.GrayImage(np.full((64, 64), 128.0))
print(f"sanity: a flat gray image yields {len(fc.detect(cascade, flat, params))} detections")
