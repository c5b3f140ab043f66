"""In-memory image records: candidate regions with their histograms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import MissingGroundTruth, MissingScores
from .geometry import BBox


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Candidate:
    """One proposed region: its box, BoW histogram and optional objectness."""

    box: BBox
    histogram: np.ndarray
    objectness: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "histogram", _frozen_array(self.histogram))
        if self.objectness is not None:
            object.__setattr__(self, "objectness", float(self.objectness))

    def __eq__(self, other):
        if not isinstance(other, Candidate):
            return NotImplemented
        return (
            self.box == other.box
            and self.objectness == other.objectness
            and np.array_equal(self.histogram, other.histogram)
        )


@dataclass(frozen=True, eq=False)
class ImageRecord:
    """An image as a ranking query.

    ``ground_truth`` and ``difficult`` are parallel; ``gt_histogram`` is
    only needed for exact-mode training.
    """

    image_id: str
    class_label: str
    width: int
    height: int
    candidates: tuple
    ground_truth: tuple = ()
    gt_histogram: Optional[np.ndarray] = None
    difficult: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "ground_truth", tuple(self.ground_truth))
        difficult = tuple(bool(d) for d in (self.difficult or ()))
        if not difficult:
            difficult = (False,) * len(self.ground_truth)
        elif len(difficult) != len(self.ground_truth):
            raise ValueError("difficult flags must match ground-truth boxes one to one")
        object.__setattr__(self, "difficult", difficult)
        if self.gt_histogram is not None:
            object.__setattr__(self, "gt_histogram", _frozen_array(self.gt_histogram))

    def __eq__(self, other):
        if not isinstance(other, ImageRecord):
            return NotImplemented
        if (self.gt_histogram is None) != (other.gt_histogram is None):
            return False
        if self.gt_histogram is not None and not np.array_equal(
            self.gt_histogram, other.gt_histogram
        ):
            return False
        return (
            self.image_id == other.image_id
            and self.class_label == other.class_label
            and self.width == other.width
            and self.height == other.height
            and self.candidates == other.candidates
            and self.ground_truth == other.ground_truth
            and self.difficult == other.difficult
        )

    def __len__(self):
        return len(self.candidates)

    @property
    def dim(self) -> int:
        return int(self.candidates[0].histogram.shape[0])

    @property
    def boxes(self) -> list[BBox]:
        return [c.box for c in self.candidates]

    def histogram_matrix(self) -> np.ndarray:
        return np.vstack([c.histogram for c in self.candidates])

    def objectness_scores(self) -> np.ndarray:
        scores = [c.objectness for c in self.candidates]
        if any(s is None for s in scores):
            raise MissingScores(f"image {self.image_id!r} lacks objectness scores")
        return np.array(scores, dtype=float)

    @property
    def usable_ground_truth(self) -> list[BBox]:
        """Ground-truth boxes not flagged as difficult."""
        return [b for b, d in zip(self.ground_truth, self.difficult) if not d]

    @property
    def has_ground_truth(self) -> bool:
        return bool(self.usable_ground_truth)

    def require_ground_truth(self) -> list[BBox]:
        boxes = self.usable_ground_truth
        if not boxes:
            raise MissingGroundTruth(f"image {self.image_id!r} has no usable ground truth")
        return boxes


def classes_of(records: Sequence[ImageRecord]) -> list[str]:
    return sorted({r.class_label for r in records})
