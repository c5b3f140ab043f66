"""Alternative transfer models used for comparison.

* generic object detector: a binary linear SVM on normalised raw
  histograms, positives being regions overlapping the truth by > 0.5;
* two-rank model: the ranking SVM with labels collapsed to {1, 2};
* non-ranking model: a binary linear SVM on the difference features;
* objectness: pick the region with the highest objectness score.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .annotator import AnnotationResult, select
from .errors import DegenerateLabels, DimensionMismatch, NoPairs
from .features import GtMode, Query, build_target_features, l1_normalize, make_queries
from .geometry import overlaps
from .optim import minimize
from .ranksvm import RankModel, TrainConfig, TrainingStats, train

POSITIVE_OVERLAP = 0.5


class FeatureSpace(str, enum.Enum):
    DIFF_VECTOR = "diff_vector"
    RAW_HISTOGRAM = "raw_histogram"


@dataclass(frozen=True, eq=False)
class BinaryModel:
    weights: np.ndarray
    bias: float
    c: float
    feature_space: FeatureSpace
    training_stats: Optional[TrainingStats] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or not np.isfinite(self.bias):
            raise ValueError("binary model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "feature_space", FeatureSpace(self.feature_space))

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise DimensionMismatch(f"model dimension {self.dim} does not match features {X.shape[-1]}")
        return X @ self.weights + self.bias

    def __eq__(self, other):
        if not isinstance(other, BinaryModel):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and self.bias == other.bias
            and self.c == other.c
            and self.feature_space == other.feature_space
            and self.training_stats == other.training_stats
        )


def binary_objective(params, X, y, c):
    """``0.5 |w|^2 + C sum max(0, 1 - y (w x + b))^2``; the bias is not penalised."""
    w, b = params[:-1], params[-1]
    slack = np.maximum(0.0, 1.0 - y * (X @ w + b))
    return 0.5 * float(w @ w) + c * float(slack @ slack)


def binary_gradient(params, X, y, c):
    w, b = params[:-1], params[-1]
    slack = np.maximum(0.0, 1.0 - y * (X @ w + b))
    coef = -2.0 * c * slack * y
    return np.concatenate([w + X.T @ coef, [coef.sum()]])


def _binary_hessp(params, v, X, y, c):
    w, b = params[:-1], params[-1]
    active = (1.0 - y * (X @ w + b)) > 0
    u = X @ v[:-1] + v[-1]
    coef = 2.0 * c * np.where(active, u, 0.0)
    return np.concatenate([v[:-1] + X.T @ coef, [coef.sum()]])


def train_binary_svm(X, y, c: float, config: TrainConfig, feature_space) -> BinaryModel:
    """Squared-hinge linear SVM with an unpenalised bias; labels are +1/-1."""
    if not c > 0:
        raise ValueError(f"C must be positive, got {c}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DegenerateLabels("training data contains a single class")
    res = minimize(
        lambda p: (binary_objective(p, X, y, c), binary_gradient(p, X, y, c)),
        lambda p, v: _binary_hessp(p, v, X, y, c),
        np.zeros(X.shape[1] + 1),
        max_iterations=config.max_iterations,
        gradient_tolerance=config.gradient_tolerance,
        rel_objective_tolerance=config.rel_objective_tolerance,
    )
    stats = TrainingStats(res.iterations, res.fun, res.grad_norm, res.stopped_by, int(X.shape[0]), res.trace)
    return BinaryModel(res.x[:-1], res.x[-1], c, feature_space, stats)


def _labels(images) -> np.ndarray:
    return np.concatenate([
        np.where(overlaps(im.boxes, im.require_ground_truth()) > POSITIVE_OVERLAP, 1.0, -1.0)
        for im in images
    ])


def train_generic_detector(images: Sequence, c: float, config: TrainConfig = TrainConfig()) -> BinaryModel:
    X = np.vstack([l1_normalize(im.histogram_matrix()) for im in images])
    return train_binary_svm(X, _labels(images), c, config, FeatureSpace.RAW_HISTOGRAM)


def train_nonranking_svm(images: Sequence, c: float, config: TrainConfig = TrainConfig()) -> BinaryModel:
    queries = make_queries(images, GtMode.APPROXIMATE)
    X = np.vstack([q.features for q in queries])
    return train_binary_svm(X, _labels(images), c, config, FeatureSpace.DIFF_VECTOR)


def two_rank_labels(ious) -> np.ndarray:
    return np.where(np.asarray(ious) > POSITIVE_OVERLAP, 1, 2)


def two_rank_queries(images: Sequence, mode=GtMode.APPROXIMATE) -> list[Query]:
    return [
        Query(q.image_id, q.features, two_rank_labels(q.overlaps), q.overlaps)
        for q in make_queries(images, mode)
    ]


def train_two_rank(images: Sequence, c: float, config: TrainConfig = TrainConfig(), mode=GtMode.APPROXIMATE) -> RankModel:
    """Ranking SVM whose labels only separate > 0.5 overlap from the rest.

    Images lacking either label contribute no pairs; if no image has
    both, :class:`NoPairs` is raised.
    """
    queries = two_rank_queries(images, mode)
    try:
        return train(queries, c, config, mode, require_permutation=False)
    except NoPairs:
        raise NoPairs("no image has regions on both sides of the 0.5 overlap boundary") from None


def binary_features(model: BinaryModel, image) -> np.ndarray:
    if model.feature_space is FeatureSpace.RAW_HISTOGRAM:
        return l1_normalize(image.histogram_matrix())
    return build_target_features(image)


def annotate_with_binary(model: BinaryModel, image) -> AnnotationResult:
    if image.dim != model.dim:
        raise DimensionMismatch(
            f"model dimension {model.dim} does not match image {image.image_id!r} dimension {image.dim}"
        )
    return select(image, model.decision_function(binary_features(model, image)))


def objectness_baseline(image) -> AnnotationResult:
    return select(image, image.objectness_scores())
