"""Annotation accuracy and the random auxiliary/target class-split protocol."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import baselines
from .annotator import FusionConfig, annotate, annotate_fused
from .errors import InsufficientClasses, MissingGroundTruth, TooFewImages
from .features import GtMode, make_queries
from .geometry import BBox, best_iou
from .ranksvm import TrainConfig, cross_validate, fold_indices, train
from .records import ImageRecord, classes_of

log = logging.getLogger(__name__)

CORRECT_OVERLAP = 0.5

METHODS = ("ranking", "tworank", "nonranking", "generic", "objectness", "fused")


def is_correct(pred: BBox, gt) -> bool:
    """True when ``pred`` overlaps some ground-truth box by strictly more than 0.5."""
    return best_iou(pred, gt) > CORRECT_OVERLAP


@dataclass(frozen=True)
class EvalReport:
    per_class_accuracy: dict
    n_images: dict
    n_correct: dict
    overall_accuracy: float

    @property
    def total_images(self) -> int:
        return sum(self.n_images.values())

    def to_dict(self) -> dict:
        return {
            "per_class_accuracy": dict(self.per_class_accuracy),
            "n_images": dict(self.n_images),
            "n_correct": dict(self.n_correct),
            "overall_accuracy": self.overall_accuracy,
        }


def evaluate(annotations: Sequence, dataset: Sequence[ImageRecord]) -> EvalReport:
    """Percentage of correctly annotated images, per class and overall.

    Correctness is recomputed from the chosen box; any ``correct`` flag
    carried by the annotations is ignored.
    """
    by_id = {r.image_id: r for r in dataset}
    n, hits = {}, {}
    for ann in annotations:
        rec = by_id.get(ann.image_id)
        if rec is None:
            raise MissingGroundTruth(f"image {ann.image_id!r} is not in the dataset")
        gt = rec.require_ground_truth()
        cls = rec.class_label
        n[cls] = n.get(cls, 0) + 1
        hits[cls] = hits.get(cls, 0) + int(is_correct(ann.chosen_box, gt))
    classes = sorted(n)
    per_class = {c: 100.0 * hits[c] / n[c] for c in classes}
    total = sum(n.values())
    overall = 100.0 * sum(hits.values()) / total if total else 0.0
    return EvalReport(per_class, {c: n[c] for c in classes}, {c: hits[c] for c in classes}, overall)


@dataclass(frozen=True)
class MethodOptions:
    c: float = 1.0
    cv: bool = False
    gt_mode: GtMode = GtMode.APPROXIMATE
    alpha: float = 0.5
    cv_by_class: bool = False
    config: TrainConfig = field(default_factory=TrainConfig)


def cross_validate_method(method: str, aux: Sequence[ImageRecord], opts: MethodOptions):
    """k-fold choice of C for any trainable method, scored by annotation accuracy.

    The ranking method uses :func:`rankxfer.ranksvm.cross_validate`
    directly. Other methods share its folds and break ties toward the
    smaller C.
    """
    cfg = opts.config
    groups = [r.class_label for r in aux] if opts.cv_by_class else None
    if method == "ranking":
        return cross_validate(make_queries(aux, opts.gt_mode), cfg, opts.gt_mode, groups)
    if len(aux) < cfg.folds:
        raise TooFewImages(f"{len(aux)} images cannot be split into {cfg.folds} folds")
    folds = fold_indices(len(aux), cfg.folds, cfg.seed, groups)
    scores = {}
    for c in sorted(cfg.c_grid):
        fixed = replace(opts, c=c, cv=False)
        accs = []
        for val_idx in folds:
            held = set(val_idx.tolist())
            fn, _ = build_annotator(method, [r for i, r in enumerate(aux) if i not in held], fixed)
            val = [aux[i] for i in val_idx]
            accs.append(evaluate([fn(im) for im in val], val).overall_accuracy / 100.0)
        scores[c] = float(np.mean(accs))
    best_c = None
    for c in sorted(scores):
        if best_c is None or scores[c] > scores[best_c]:
            best_c = c
    return best_c, scores


def build_annotator(method: str, aux: Sequence[ImageRecord], opts: MethodOptions = MethodOptions()):
    """Train ``method`` on auxiliary images; returns ``(annotate_fn, c_used)``."""
    if method == "objectness":
        return baselines.objectness_baseline, None
    c = cross_validate_method(method, aux, opts)[0] if opts.cv else opts.c
    if method in ("ranking", "fused"):
        model = train(make_queries(aux, opts.gt_mode), c, opts.config, opts.gt_mode)
        if method == "fused":
            fusion = FusionConfig(opts.alpha)
            return (lambda im: annotate_fused(model, im, None, fusion)), c
        return (lambda im: annotate(model, im)), c
    if method == "tworank":
        model = baselines.train_two_rank(aux, c, opts.config, opts.gt_mode)
        return (lambda im: annotate(model, im)), c
    if method == "nonranking":
        model = baselines.train_nonranking_svm(aux, c, opts.config)
    elif method == "generic":
        model = baselines.train_generic_detector(aux, c, opts.config)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return (lambda im: baselines.annotate_with_binary(model, im)), c


@dataclass(frozen=True)
class TrialResult:
    index: int
    auxiliary_classes: tuple
    target_classes: tuple
    c: Optional[float]
    report: EvalReport


@dataclass(frozen=True)
class SplitReport:
    method: str
    seed: int
    n_aux: int
    trials: tuple
    per_class_accuracy: dict
    class_average: float
    overall_mean: float
    overall_std: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "n_aux": self.n_aux,
            "per_class_accuracy": dict(self.per_class_accuracy),
            "class_average": self.class_average,
            "overall_mean": self.overall_mean,
            "overall_std": self.overall_std,
            "trials": [
                {
                    "index": t.index,
                    "auxiliary_classes": list(t.auxiliary_classes),
                    "target_classes": list(t.target_classes),
                    "c": t.c,
                    "report": t.report.to_dict(),
                }
                for t in self.trials
            ],
        }


def split_classes(classes: Sequence[str], n_aux: int, seed: int, trial: int):
    rng = np.random.default_rng([seed, trial])
    aux = sorted(rng.choice(sorted(classes), size=n_aux, replace=False).tolist())
    target = sorted(set(classes) - set(aux))
    return tuple(aux), tuple(target)


def run_split_protocol(
    dataset: Sequence[ImageRecord],
    n_aux: int,
    trials: int,
    seed: int,
    method: str = "ranking",
    options: MethodOptions = MethodOptions(),
    progress: Optional[Callable[[str], None]] = None,
) -> SplitReport:
    """Repeat: draw auxiliary classes, train on them, annotate the rest.

    Each class's accuracy is averaged over the trials where it was a
    target. ``overall_mean``/``overall_std`` summarise the per-trial
    overall accuracies (sample standard deviation; 0 for one trial).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    images = [r for r in dataset if r.has_ground_truth]
    classes = classes_of(images)
    if not 1 <= n_aux < len(classes):
        raise InsufficientClasses(f"{len(classes)} classes cannot provide {n_aux} auxiliary classes and a target")
    results = []
    for t in range(trials):
        aux_cls, tgt_cls = split_classes(classes, n_aux, seed, t)
        aux = [r for r in images if r.class_label in aux_cls]
        tgt = [r for r in images if r.class_label in tgt_cls]
        fn, c = build_annotator(method, aux, options)
        report = evaluate([fn(im) for im in tgt], tgt)
        if progress:
            progress(f"trial {t + 1}/{trials}: {report.overall_accuracy:.2f}%")
        results.append(TrialResult(t, aux_cls, tgt_cls, c, report))

    per_class = {}
    for cls in classes:
        accs = [r.report.per_class_accuracy[cls] for r in results if cls in r.report.per_class_accuracy]
        if accs:
            per_class[cls] = float(np.mean(accs))
    overall = np.array([r.report.overall_accuracy for r in results])
    return SplitReport(
        method=method,
        seed=seed,
        n_aux=n_aux,
        trials=tuple(results),
        per_class_accuracy=per_class,
        class_average=float(np.mean(list(per_class.values()))),
        overall_mean=float(overall.mean()),
        overall_std=float(overall.std(ddof=1)) if trials > 1 else 0.0,
    )


def format_eval_table(report: EvalReport) -> str:
    out = io.StringIO()
    width = max([len("class")] + [len(c) for c in report.per_class_accuracy])
    out.write(f"{'class':<{width}}  {'images':>6}  {'correct':>7}  {'accuracy':>9}\n")
    for cls, acc in report.per_class_accuracy.items():
        out.write(f"{cls:<{width}}  {report.n_images[cls]:>6}  {report.n_correct[cls]:>7}  {acc:>8.2f}%\n")
    out.write(f"{'overall':<{width}}  {report.total_images:>6}  {sum(report.n_correct.values()):>7}  "
              f"{report.overall_accuracy:>8.2f}%\n")
    return out.getvalue()


def format_split_table(report: SplitReport) -> str:
    out = io.StringIO()
    width = max([len("class average")] + [len(c) for c in report.per_class_accuracy])
    out.write(f"method: {report.method}  trials: {len(report.trials)}  n_aux: {report.n_aux}  seed: {report.seed}\n")
    for cls, acc in report.per_class_accuracy.items():
        out.write(f"{cls:<{width}}  {acc:>8.2f}%\n")
    out.write(f"{'class average':<{width}}  {report.class_average:>8.2f}%\n")
    out.write(f"{'overall':<{width}}  {report.overall_mean:>8.2f}% +/- {report.overall_std:.2f}\n")
    return out.getvalue()
