import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankxfer.geometry import (
    BBox,
    assign_ranks,
    best_iou,
    center_distance,
    intersection_area,
    iou,
    nearest_center_distance,
    overlaps,
)


def raster_iou(a, b, scale=1):
    """Pixel-count IoU on a grid with ``scale`` cells per unit."""
    lo = np.floor(min(a.x1, b.x1) * scale)
    hi = np.ceil(max(a.x2, b.x2) * scale)
    lo_y = np.floor(min(a.y1, b.y1) * scale)
    hi_y = np.ceil(max(a.y2, b.y2) * scale)
    xs = (np.arange(lo, hi) + 0.5) / scale
    ys = (np.arange(lo_y, hi_y) + 0.5) / scale
    X, Y = np.meshgrid(xs, ys)
    ina = (X >= a.x1) & (X < a.x2) & (Y >= a.y1) & (Y < a.y2)
    inb = (X >= b.x1) & (X < b.x2) & (Y >= b.y1) & (Y < b.y2)
    union = np.count_nonzero(ina | inb)
    return np.count_nonzero(ina & inb) / union


class TestBBox:
    def test_properties(self):
        b = BBox(1, 2, 4, 8)
        assert (b.width, b.height, b.area) == (3, 6, 18)
        assert b.center == (2.5, 5.0)
        assert b.as_tuple() == (1.0, 2.0, 4.0, 8.0)

    @pytest.mark.parametrize("coords", [(0, 0, 0, 1), (0, 0, 1, 0), (2, 0, 1, 1), (0, 0, math.inf, 1),
                                        (0, math.nan, 1, 1)])
    def test_rejects_degenerate(self, coords):
        with pytest.raises(ValueError):
            BBox(*coords)

    def test_from_inclusive(self):
        assert BBox.from_inclusive(1, 1, 10, 10) == BBox(1, 1, 11, 11)
        assert BBox.from_inclusive(3, 3, 3, 3).area == 1


class TestIoU:
    def test_identity(self):
        assert iou(BBox(0, 0, 2, 2), BBox(0, 0, 2, 2)) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 1, 1), BBox(5, 5, 6, 6)) == 0.0

    def test_touching_edges_do_not_overlap(self):
        assert iou(BBox(0, 0, 1, 1), BBox(1, 0, 2, 1)) == 0.0

    def test_partial_matches_raster(self):
        a, b = BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)
        assert iou(a, b) == pytest.approx(1 / 7)
        assert raster_iou(a, b, scale=20) == pytest.approx(1 / 7)

    def test_exact_half(self):
        assert iou(BBox(0, 0, 2, 1), BBox(0, 0, 1, 1)) == 0.5

    def test_integer_boxes_equal_pixel_count(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            x1, y1 = rng.integers(0, 30, size=2)
            a = BBox(x1, y1, x1 + rng.integers(1, 20), y1 + rng.integers(1, 20))
            x1, y1 = rng.integers(0, 30, size=2)
            b = BBox(x1, y1, x1 + rng.integers(1, 20), y1 + rng.integers(1, 20))
            if intersection_area(a, b) == 0:
                assert iou(a, b) == 0.0
            else:
                assert iou(a, b) == pytest.approx(raster_iou(a, b), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=8, max_size=8),
           st.floats(0.1, 30), st.floats(0.1, 30))
    def test_symmetric_and_bounded(self, xs, w, h):
        a = BBox(xs[0], xs[1], xs[0] + w, xs[1] + h)
        b = BBox(xs[2], xs[3], xs[2] + abs(xs[4]) + 0.1, xs[3] + abs(xs[5]) + 0.1)
        v = iou(a, b)
        assert 0.0 <= v <= 1.0
        assert v == iou(b, a)


class TestCenterDistance:
    def test_identical(self):
        assert center_distance(BBox(0, 0, 2, 2), BBox(0, 0, 2, 2)) == 0.0

    def test_horizontal(self):
        assert center_distance(BBox(0, 0, 2, 2), BBox(4, 0, 6, 2)) == 4.0

    def test_offset_boxes(self):
        # centres (1, 1) and (4, 6)
        assert center_distance(BBox(0, 0, 2, 2), BBox(3, 4, 5, 8)) == pytest.approx(math.sqrt(34))

    def test_multiple_ground_truths(self):
        gt = [BBox(0, 0, 2, 2), BBox(10, 10, 12, 12)]
        box = BBox(9, 9, 11, 11)
        assert nearest_center_distance(box, gt) == pytest.approx(math.sqrt(2))
        assert best_iou(box, gt) == pytest.approx(1 / 7)
        np.testing.assert_allclose(overlaps([box, BBox(0, 0, 2, 2)], gt), [1 / 7, 1.0])


def brute_ranks(ious, dists):
    order = sorted(range(len(ious)),
                   key=lambda j: (ious[j] == 0, -ious[j] if ious[j] > 0 else dists[j], j))
    out = [0] * len(ious)
    for r, j in enumerate(order, 1):
        out[j] = r
    return out


class TestAssignRanks:
    gt = BBox(0, 0, 4, 4)

    def test_monotone_overlap(self):
        boxes = [BBox(0, 0, 4, 3.2), BBox(0, 0, 4, 1.2), BBox(10, 10, 11, 11)]
        np.testing.assert_allclose(overlaps(boxes, self.gt), [0.8, 0.3, 0.0])
        np.testing.assert_array_equal(assign_ranks(boxes, self.gt), [1, 2, 3])

    def test_nearer_background_ranks_higher(self):
        near, far = BBox(5, 0, 7, 2), BBox(30, 30, 32, 32)
        np.testing.assert_array_equal(assign_ranks([far, near], self.gt), [2, 1])

    def test_mixed_zero_overlap(self):
        # ious [0, 0.5, 0] with centre distances [10, -, 5]
        boxes = [BBox(11, 1, 13, 3), BBox(0, 0, 4, 2), BBox(6, 1, 8, 3)]
        np.testing.assert_allclose(overlaps(boxes, self.gt), [0.0, 0.5, 0.0])
        assert center_distance(boxes[0], self.gt) == 10.0
        assert center_distance(boxes[2], self.gt) == 5.0
        np.testing.assert_array_equal(assign_ranks(boxes, self.gt), [3, 1, 2])

    def test_ties_break_by_index(self):
        boxes = [BBox(10, 0, 12, 2), BBox(-8, 0, -6, 2), BBox(0, 0, 4, 4)]
        np.testing.assert_array_equal(assign_ranks(boxes, self.gt), [2, 3, 1])

    def test_random_against_brute_force(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            gt = BBox(20, 20, 20 + rng.uniform(5, 20), 20 + rng.uniform(5, 20))
            boxes = []
            for _ in range(rng.integers(1, 30)):
                x, y = rng.uniform(0, 60, size=2)
                boxes.append(BBox(x, y, x + rng.uniform(1, 20), y + rng.uniform(1, 20)))
            ious = [iou(b, gt) for b in boxes]
            dists = [center_distance(b, gt) for b in boxes]
            ranks = assign_ranks(boxes, gt)
            np.testing.assert_array_equal(ranks, brute_ranks(ious, dists))
            np.testing.assert_array_equal(np.sort(ranks), np.arange(1, len(boxes) + 1))
