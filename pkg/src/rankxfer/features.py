"""Category-independent difference-vector features.

A candidate is described by the element-wise absolute difference between
its L1-normalised histogram and a reference histogram, also normalised.
The reference is either the ground-truth region's histogram (exact mode)
or the mean of all candidate histograms of the same image (approximate
mode). Only the approximate reference is available for target images.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, MissingGroundTruth, ZeroHistogram
from .geometry import assign_ranks, overlaps
from .records import ImageRecord


class GtMode(str, enum.Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"


def l1_normalize(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    total = np.abs(h).sum(axis=-1, keepdims=True)
    if np.any(total == 0):
        raise ZeroHistogram("histogram has zero L1 norm")
    return h / total


def mean_histogram(candidates) -> np.ndarray:
    """Element-wise mean of a list (or ``(N, D)`` array) of histograms."""
    try:
        arr = np.asarray(candidates, dtype=float)
    except ValueError as exc:
        raise DimensionMismatch("histograms differ in dimension") from exc
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty (N, D) stack, got shape {arr.shape}")
    return arr.mean(axis=0)


def diff_vector(x, ref) -> np.ndarray:
    """``|x / |x|_1 - ref / |ref|_1|``; ``x`` may also be an ``(N, D)`` stack."""
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if x.shape[-1] != ref.shape[-1]:
        raise DimensionMismatch(f"dimensions {x.shape[-1]} and {ref.shape[-1]} differ")
    return np.abs(l1_normalize(x) - l1_normalize(ref))


def _reference(image: ImageRecord, mode: GtMode, hist: np.ndarray) -> np.ndarray:
    if GtMode(mode) is GtMode.EXACT:
        if image.gt_histogram is None:
            raise MissingGroundTruth(
                f"image {image.image_id!r}: exact mode needs a ground-truth histogram"
            )
        return image.gt_histogram
    return mean_histogram(hist)


def build_target_features(image: ImageRecord) -> np.ndarray:
    """``(M, D)`` difference vectors against the mean candidate histogram."""
    hist = image.histogram_matrix()
    return diff_vector(hist, mean_histogram(hist))


def build_training_features(image: ImageRecord, mode: GtMode = GtMode.APPROXIMATE):
    """Difference vectors and rank labels for a fully annotated image.

    Returns ``(features, ranks)``: an ``(M, D)`` array and an integer
    array holding a permutation of ``1..M``.
    """
    gt = image.require_ground_truth()
    hist = image.histogram_matrix()
    feats = diff_vector(hist, _reference(image, mode, hist))
    return feats, assign_ranks(image.boxes, gt)


@dataclass(frozen=True, eq=False)
class Query:
    """One image's featurised candidates, the unit that pairs live in.

    ``overlaps`` is the best IoU of each candidate with the ground truth;
    cross-validation uses it to score annotation accuracy.
    """

    image_id: str
    features: np.ndarray
    ranks: np.ndarray
    overlaps: Optional[np.ndarray] = None

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])


def make_query(image: ImageRecord, mode: GtMode = GtMode.APPROXIMATE) -> Query:
    feats, ranks = build_training_features(image, mode)
    ov = overlaps(image.boxes, image.require_ground_truth())
    return Query(image.image_id, feats, ranks, ov)


def make_queries(images: Sequence[ImageRecord], mode: GtMode = GtMode.APPROXIMATE) -> list[Query]:
    queries = [make_query(im, mode) for im in images]
    dims = {q.dim for q in queries}
    if len(dims) > 1:
        raise DimensionMismatch(f"images have differing histogram dimensions {sorted(dims)}")
    return queries
