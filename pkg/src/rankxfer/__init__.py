"""Category-independent region ranking for weakly supervised annotation.

A linear RankSVM learns, on auxiliary classes with bounding boxes, how
candidate regions should be ordered by their overlap with the object. The
features are absolute differences between a candidate's histogram and a
reference histogram, so the learned ranking transfers to new classes.
"""

from .annotator import AnnotationResult, FusionConfig, annotate, annotate_all, annotate_fused, fuse_scores
from .baselines import BinaryModel, FeatureSpace
from .errors import RankXferError
from .evaluation import EvalReport, SplitReport, evaluate, is_correct, run_split_protocol
from .features import GtMode, Query, make_queries
from .geometry import BBox, assign_ranks, center_distance, iou
from .ranksvm import RankModel, TrainConfig, cross_validate, score, train
from .records import Candidate, ImageRecord

__version__ = "0.1.0"

__all__ = [
    "AnnotationResult",
    "BBox",
    "BinaryModel",
    "Candidate",
    "EvalReport",
    "FeatureSpace",
    "FusionConfig",
    "GtMode",
    "ImageRecord",
    "Query",
    "RankModel",
    "RankXferError",
    "SplitReport",
    "TrainConfig",
    "annotate",
    "annotate_all",
    "annotate_fused",
    "assign_ranks",
    "center_distance",
    "cross_validate",
    "evaluate",
    "fuse_scores",
    "iou",
    "is_correct",
    "make_queries",
    "run_split_protocol",
    "score",
    "train",
]
