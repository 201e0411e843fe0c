"""Sliding-window detection, box grouping, and face extraction."""

import numpy as np
import pytest

import facecluster as fc
from facecluster.synth import planted_scene

from conftest import box_iou


class TestScanParams:
    def test_defaults(self):
        p = fc.ScanParams()
        assert p.scale_factor == 1.25
        assert p.min_neighbors == 3

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"scale_factor": 1.0},
            {"step_fraction": 0.0},
            {"step_fraction": 1.5},
            {"min_neighbors": -1},
            {"iou_merge_threshold": 0.0},
            {"iou_merge_threshold": 1.0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            fc.ScanParams(**kwargs)


class TestDetect:
    def test_uniform_image_yields_nothing(self, cascade):
        # every Haar response is exactly 0 on a flat raster, and the trained
        # stage thresholds are positive
        assert all(s.threshold > 0 for s in cascade.stages)
        img = fc.GrayImage(np.full((64, 64), 128.0))
        assert fc.detect(cascade, img) == []

    def test_planted_pattern_found_once(self, cascade):
        rng = np.random.default_rng(123)
        img, truth = planted_scene(rng, template=0, scene_size=64, pattern_size=26)
        detections = fc.detect(cascade, img)
        assert len(detections) == 1
        assert box_iou(detections[0].box, truth) >= 0.5

    def test_min_neighbors_filters_monotonically(self, cascade, scenes):
        img = scenes[0][0]
        n0 = len(fc.detect(cascade, img, fc.ScanParams(min_neighbors=0)))
        n3 = len(fc.detect(cascade, img, fc.ScanParams(min_neighbors=3)))
        assert n0 >= n3

    def test_deterministic(self, cascade, scenes):
        img = scenes[1][0]
        a = fc.detect(cascade, img)
        b = fc.detect(cascade, img)
        assert a == b

    def test_scene_corpus_rates(self, cascade, scenes):
        detected = 0
        localized = 0
        for img, truth, _ in scenes:
            detections = fc.detect(cascade, img)
            if detections:
                detected += 1
                best = max(detections, key=lambda d: (d.box.area, d.score, -d.box.x, -d.box.y))
                localized += box_iou(best.box, truth) >= 0.5
        assert detected >= 0.95 * len(scenes)
        assert localized == detected  # every reported box is on target

    def test_results_sorted_by_score(self, cascade, scenes):
        for img, _, _ in scenes[:10]:
            detections = fc.detect(cascade, img, fc.ScanParams(min_neighbors=0))
            scores = [d.score for d in detections]
            assert scores == sorted(scores, reverse=True)

    def test_tiny_image_rejected(self, cascade):
        img = fc.GrayImage(np.zeros((10, 10)))
        with pytest.raises(ValueError, match="base window"):
            fc.detect(cascade, img)

    def test_boxes_inside_image(self, cascade, scenes):
        for img, _, _ in scenes[:20]:
            for d in fc.detect(cascade, img):
                assert 0 <= d.box.x and d.box.x + d.box.w <= img.width
                assert 0 <= d.box.y and d.box.y + d.box.h <= img.height
                assert d.neighbors >= 1


class TestExtractFace:
    def test_empty_detections_give_none(self):
        img = fc.GrayImage(np.zeros((64, 64)))
        assert fc.extract_face(img, []) is None

    def test_single_detection_cropped_and_resized(self):
        rng = np.random.default_rng(4)
        px = rng.integers(0, 256, size=(64, 64)).astype(float)
        img = fc.GrayImage(px)
        det = fc.Detection(fc.Rect(8, 12, 30, 30), 1.25, 5.0, 3)
        face = fc.extract_face(img, [det])
        assert face.width == 224 and face.height == 224
        direct = fc.resize_bilinear(
            fc.GrayImage(px[12:42, 8:38]), 224, 224
        )
        assert np.array_equal(face.pixels, direct.pixels)

    def test_largest_area_wins(self):
        rng = np.random.default_rng(5)
        img = fc.GrayImage(rng.integers(0, 256, size=(64, 64)).astype(float))
        small = fc.Detection(fc.Rect(0, 0, 10, 10), 1.0, 9.0, 4)
        big = fc.Detection(fc.Rect(20, 20, 20, 20), 1.0, 1.0, 4)
        face = fc.extract_face(img, [small, big])
        direct = fc.resize_bilinear(fc.GrayImage(img.pixels[20:40, 20:40]), 224, 224)
        assert np.array_equal(face.pixels, direct.pixels)

    def test_area_tie_broken_by_score(self):
        rng = np.random.default_rng(6)
        img = fc.GrayImage(rng.integers(0, 256, size=(64, 64)).astype(float))
        low = fc.Detection(fc.Rect(0, 0, 16, 16), 1.0, 1.0, 4)
        high = fc.Detection(fc.Rect(30, 30, 16, 16), 1.0, 7.0, 4)
        face = fc.extract_face(img, [low, high])
        direct = fc.resize_bilinear(fc.GrayImage(img.pixels[30:46, 30:46]), 224, 224)
        assert np.array_equal(face.pixels, direct.pixels)
