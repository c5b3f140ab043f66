"""Annotate target images with a trained ranking model.

Every candidate is scored and the best-scoring one becomes the image's
annotation. Scores can be fused with an external per-candidate score
(objectness, or any other method's output) before the argmax.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, LengthMismatch
from .features import build_target_features
from .geometry import BBox, best_iou
from .ranksvm import score


@dataclass(frozen=True)
class AnnotationResult:
    image_id: str
    chosen_index: int
    chosen_box: BBox
    candidate_scores: tuple
    correct: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "chosen_index": self.chosen_index,
            "chosen_box": list(self.chosen_box.as_tuple()),
            "candidate_scores": list(self.candidate_scores),
            "correct": self.correct,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotationResult":
        return cls(
            image_id=str(d["image_id"]),
            chosen_index=int(d["chosen_index"]),
            chosen_box=BBox(*map(float, d["chosen_box"])),
            candidate_scores=tuple(float(s) for s in d["candidate_scores"]),
            correct=d.get("correct"),
        )


@dataclass(frozen=True)
class FusionConfig:
    """``alpha`` weighs the ranking score, ``1 - alpha`` the external one."""

    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


def select(image, scores) -> AnnotationResult:
    """Pick the highest score (first index on ties) and grade it if possible."""
    scores = np.asarray(scores, dtype=float)
    idx = int(np.argmax(scores))
    box = image.candidates[idx].box
    gt = image.usable_ground_truth
    correct = best_iou(box, gt) > 0.5 if gt else None
    return AnnotationResult(image.image_id, idx, box, tuple(float(s) for s in scores), correct)


def model_scores(model, image) -> np.ndarray:
    if image.dim != model.dim:
        raise DimensionMismatch(
            f"model dimension {model.dim} does not match image {image.image_id!r} dimension {image.dim}"
        )
    return score(model, build_target_features(image))


def annotate(model, image) -> AnnotationResult:
    return select(image, model_scores(model, image))


def minmax(scores) -> np.ndarray:
    """Rescale to ``[0, 1]``; a constant list maps to all 0.5."""
    s = np.asarray(scores, dtype=float)
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.full_like(s, 0.5)
    return (s - lo) / (hi - lo)


def fuse_scores(model_scores, external_scores, cfg: FusionConfig = FusionConfig()) -> np.ndarray:
    m = np.asarray(model_scores, dtype=float)
    e = np.asarray(external_scores, dtype=float)
    if m.shape != e.shape or m.ndim != 1:
        raise LengthMismatch(f"score lists differ in shape: {m.shape} vs {e.shape}")
    if m.size == 0:
        raise LengthMismatch("score lists are empty")
    if not np.all(np.isfinite(e)):
        raise ValueError("external scores must be finite")
    if cfg.alpha == 1.0:
        return minmax(m)
    if cfg.alpha == 0.0:
        return minmax(e)
    return cfg.alpha * minmax(m) + (1.0 - cfg.alpha) * minmax(e)


def annotate_fused(model, image, external_scores=None, cfg: FusionConfig = FusionConfig()) -> AnnotationResult:
    """Annotate using fused scores; ``external_scores`` defaults to objectness."""
    if external_scores is None:
        external_scores = image.objectness_scores()
    return select(image, fuse_scores(model_scores(model, image), external_scores, cfg))


def annotate_all(model, images: Sequence, fusion: Optional[FusionConfig] = None) -> list[AnnotationResult]:
    if fusion is None:
        return [annotate(model, im) for im in images]
    return [annotate_fused(model, im, None, fusion) for im in images]
