"""Bounding-box arithmetic and overlap-based rank assignment.

Boxes are continuous and half-open: a box ``(x1, y1, x2, y2)`` covers
``[x1, x2) x [y1, y2)`` and has area ``(x2 - x1) * (y2 - y1)``. VOC style
inclusive pixel boxes are converted with :meth:`BBox.from_inclusive`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in coords):
            raise ValueError(f"non-finite box coordinates {coords}")
        if not (self.x2 > self.x1 and self.y2 > self.y1):
            raise ValueError(f"box {coords} has non-positive area")

    @classmethod
    def from_inclusive(cls, xmin, ymin, xmax, ymax) -> "BBox":
        """Box from inclusive pixel bounds (the VOC convention)."""
        return cls(float(xmin), float(ymin), float(xmax) + 1.0, float(ymax) + 1.0)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


BoxOrBoxes = Union[BBox, Sequence[BBox]]


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection area divided by union area, in ``[0, 1]``."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def center_distance(a: BBox, b: BBox) -> float:
    """Euclidean distance between box centres."""
    (ax, ay), (bx, by) = a.center, b.center
    return math.hypot(ax - bx, ay - by)


def _as_list(gt: BoxOrBoxes) -> list[BBox]:
    if isinstance(gt, BBox):
        return [gt]
    boxes = list(gt)
    if not boxes:
        raise ValueError("at least one ground-truth box is required")
    return boxes


def best_iou(box: BBox, gt: BoxOrBoxes) -> float:
    """Largest overlap of ``box`` with any of the ground-truth boxes."""
    return max(iou(box, g) for g in _as_list(gt))


def nearest_center_distance(box: BBox, gt: BoxOrBoxes) -> float:
    return min(center_distance(box, g) for g in _as_list(gt))


def overlaps(candidates: Sequence[BBox], gt: BoxOrBoxes) -> np.ndarray:
    """Per-candidate best overlap with the ground truth, as an array."""
    gts = _as_list(gt)
    return np.array([max(iou(c, g) for g in gts) for c in candidates], dtype=float)


def assign_ranks(candidates: Sequence[BBox], gt: BoxOrBoxes) -> np.ndarray:
    """Rank candidates against the ground truth, 1 being the best.

    Overlapping candidates come first in decreasing overlap. Candidates
    that do not overlap follow, nearest centre first. Remaining ties go
    to the lower candidate index. With several ground-truth boxes the
    best overlap and the nearest distance over all of them are used.

    Returns an integer array holding a permutation of ``1..M``.
    """
    if len(candidates) == 0:
        raise ValueError("assign_ranks needs at least one candidate")
    gts = _as_list(gt)
    ov = overlaps(candidates, gts)
    dist = np.array([nearest_center_distance(c, gts) for c in candidates])
    index = np.arange(len(candidates))
    # overlapping: key (0, -iou); disjoint: key (1, distance)
    group = (ov <= 0.0).astype(int)
    primary = np.where(group == 0, -ov, dist)
    order = np.lexsort((index, primary, group))
    ranks = np.empty(len(candidates), dtype=np.int64)
    ranks[order] = np.arange(1, len(candidates) + 1)
    return ranks
