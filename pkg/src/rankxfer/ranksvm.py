"""Primal pairwise RankSVM with the squared hinge loss.

The model is a weight vector ``w``; candidates are scored by ``w @ d``
and a higher score means a better predicted rank. Training minimises

    0.5 * |w|^2 + C * sum_{(k, l) in P} max(0, 1 - (w @ d_k - w @ d_l))^2

where ``P`` holds every within-image pair whose first member has the
smaller (better) rank label.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidLabels, NoPairs, TooFewImages
from .features import GtMode, Query
from .optim import minimize

log = logging.getLogger(__name__)

DEFAULT_C_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0)


class PreferencePair(NamedTuple):
    query_id: str
    better: int
    worse: int


@dataclass(frozen=True, eq=False)
class PairSet:
    """Preference pairs over a stack of queries.

    ``better`` and ``worse`` index rows of the stacked feature matrix
    (see :func:`stack_features`); ``query`` indexes ``image_ids``.
    """

    image_ids: tuple
    offsets: np.ndarray
    query: np.ndarray
    better: np.ndarray
    worse: np.ndarray

    def __len__(self):
        return int(self.better.shape[0])

    def __iter__(self) -> Iterator[PreferencePair]:
        for q, b, w in zip(self.query, self.better, self.worse):
            off = self.offsets[q]
            yield PreferencePair(self.image_ids[q], int(b - off), int(w - off))


@dataclass(frozen=True)
class TrainConfig:
    c_grid: tuple = DEFAULT_C_GRID
    folds: int = 5
    max_iterations: int = 200
    rel_objective_tolerance: float = 1e-12
    gradient_tolerance: float = 1e-6
    pair_cap_per_image: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        if not self.c_grid or any(c <= 0 for c in self.c_grid):
            raise ValueError("c_grid must be a non-empty list of positive values")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.rel_objective_tolerance <= 0 or self.gradient_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.pair_cap_per_image is not None and self.pair_cap_per_image < 1:
            raise ValueError("pair_cap_per_image must be positive")


@dataclass(frozen=True)
class TrainingStats:
    iterations: int
    objective: float
    gradient_norm: float
    stopped_by: str
    n_pairs: int
    objective_trace: tuple = ()


@dataclass(frozen=True, eq=False)
class RankModel:
    weights: np.ndarray
    c: float
    gt_mode: GtMode = GtMode.APPROXIMATE
    training_stats: Optional[TrainingStats] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a finite 1-D vector")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "gt_mode", GtMode(self.gt_mode))

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    def __eq__(self, other):
        if not isinstance(other, RankModel):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and self.c == other.c
            and self.gt_mode == other.gt_mode
            and self.training_stats == other.training_stats
        )


def stack_features(queries: Sequence[Query]):
    """Stack query features into one matrix; returns ``(X, offsets)``."""
    if not queries:
        raise NoPairs("no queries given")
    dims = {q.dim for q in queries}
    if len(dims) != 1:
        raise DimensionMismatch(f"queries have differing dimensions {sorted(dims)}")
    sizes = np.array([len(q) for q in queries])
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    return np.vstack([q.features for q in queries]), offsets


def _check_permutation(ranks: np.ndarray, image_id) -> None:
    m = ranks.shape[0]
    if not np.array_equal(np.sort(ranks), np.arange(1, m + 1)):
        raise InvalidLabels(f"image {image_id!r}: ranks are not a permutation of 1..{m}")


def generate_pairs(
    queries: Sequence[Query],
    cap: Optional[int] = None,
    seed: int = 0,
    require_permutation: bool = True,
) -> PairSet:
    """All within-image preference pairs, better-ranked member first.

    Pairs are ordered by the rank labels of their members, so the pair
    sequence does not depend on the order candidates are listed in. With
    ``cap`` a uniform subsample of at most ``cap`` pairs is kept per image;
    the subsample for image ``i`` is drawn from the stream ``(seed, i)``.
    """
    _, offsets = stack_features(queries)
    qs, bs, ws = [], [], []
    for qi, q in enumerate(queries):
        ranks = np.asarray(q.ranks)
        if ranks.shape != (len(q),):
            raise InvalidLabels(f"image {q.image_id!r}: one rank per candidate required")
        if require_permutation:
            _check_permutation(ranks, q.image_id)
        elif np.any(ranks < 1):
            raise InvalidLabels(f"image {q.image_id!r}: ranks must be >= 1")
        # sort by (rank, index) so pairs come out in rank order
        order = np.lexsort((np.arange(len(q)), ranks))
        i, j = np.triu_indices(len(q), k=1)
        keep = ranks[order[i]] < ranks[order[j]]
        better, worse = order[i[keep]], order[j[keep]]
        if cap is not None and better.shape[0] > cap:
            rng = np.random.default_rng([seed, qi])
            pick = np.sort(rng.choice(better.shape[0], size=cap, replace=False))
            better, worse = better[pick], worse[pick]
        qs.append(np.full(better.shape[0], qi, dtype=np.int64))
        bs.append(better + offsets[qi])
        ws.append(worse + offsets[qi])
    return PairSet(
        image_ids=tuple(q.image_id for q in queries),
        offsets=offsets,
        query=np.concatenate(qs).astype(np.int64),
        better=np.concatenate(bs).astype(np.int64),
        worse=np.concatenate(ws).astype(np.int64),
    )


def _check_dims(w, X):
    if w.shape != (X.shape[1],):
        raise DimensionMismatch(f"weight dimension {w.shape} does not match features {X.shape[1]}")


def _margins(w, pairs, X):
    s = X @ w
    return s[pairs.better] - s[pairs.worse]


def _scatter(coef, pairs, X):
    """``sum_p coef_p * (x_better_p - x_worse_p)`` in a fixed order."""
    n = X.shape[0]
    per_row = np.bincount(pairs.better, coef, minlength=n) - np.bincount(pairs.worse, coef, minlength=n)
    return X.T @ per_row


def objective(w, pairs: PairSet, X, c: float) -> float:
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    _check_dims(w, X)
    slack = np.maximum(0.0, 1.0 - _margins(w, pairs, X))
    return 0.5 * float(w @ w) + c * float(slack @ slack)


def gradient(w, pairs: PairSet, X, c: float) -> np.ndarray:
    """Analytic gradient: ``w - 2C * sum_active (1 - t_p) * (d_k - d_l)``."""
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    _check_dims(w, X)
    slack = np.maximum(0.0, 1.0 - _margins(w, pairs, X))
    return w + _scatter(-2.0 * c * slack, pairs, X)


def _objective_and_gradient(w, pairs, X, c):
    slack = np.maximum(0.0, 1.0 - _margins(w, pairs, X))
    f = 0.5 * float(w @ w) + c * float(slack @ slack)
    return f, w + _scatter(-2.0 * c * slack, pairs, X)


def _hessp(w, v, pairs, X, c):
    active = _margins(w, pairs, X) < 1.0
    dv = _margins(v, pairs, X)
    return v + _scatter(2.0 * c * np.where(active, dv, 0.0), pairs, X)


def train_on_pairs(
    X, pairs: PairSet, c: float, config: TrainConfig, gt_mode=GtMode.APPROXIMATE
) -> RankModel:
    if not c > 0:
        raise ValueError(f"C must be positive, got {c}")
    if len(pairs) == 0:
        raise NoPairs("no preference pairs to train on")
    X = np.asarray(X, dtype=float)
    res = minimize(
        lambda w: _objective_and_gradient(w, pairs, X, c),
        lambda w, v: _hessp(w, v, pairs, X, c),
        np.zeros(X.shape[1]),
        max_iterations=config.max_iterations,
        gradient_tolerance=config.gradient_tolerance,
        rel_objective_tolerance=config.rel_objective_tolerance,
    )
    log.debug("C=%g: %d iterations, f=%.6g, |g|=%.3g (%s)", c, res.iterations, res.fun, res.grad_norm, res.stopped_by)
    stats = TrainingStats(
        iterations=res.iterations,
        objective=res.fun,
        gradient_norm=res.grad_norm,
        stopped_by=res.stopped_by,
        n_pairs=len(pairs),
        objective_trace=res.trace,
    )
    return RankModel(res.x, c, gt_mode, stats)


def train(
    queries: Sequence[Query],
    c: float,
    config: TrainConfig = TrainConfig(),
    gt_mode=GtMode.APPROXIMATE,
    require_permutation: bool = True,
) -> RankModel:
    """Fit a ranking model to labelled queries with regularisation weight ``c``."""
    if not c > 0:
        raise ValueError(f"C must be positive, got {c}")
    X, _ = stack_features(queries)
    pairs = generate_pairs(queries, config.pair_cap_per_image, config.seed, require_permutation)
    return train_on_pairs(X, pairs, c, config, gt_mode)


def score(model, d) -> np.ndarray:
    """``w @ d`` for one difference vector or an ``(M, D)`` stack of them."""
    w = model.weights if hasattr(model, "weights") else np.asarray(model, dtype=float)
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != w.shape[0]:
        raise DimensionMismatch(f"model dimension {w.shape[0]} does not match features {d.shape[-1]}")
    out = d @ w
    return float(out) if out.ndim == 0 else out


def pairwise_accuracy(model, queries: Sequence[Query]) -> float:
    """Fraction of within-image pairs ordered correctly; score ties count half."""
    hits = 0.0
    total = 0
    for q in queries:
        s = score(model, q.features)
        r = np.asarray(q.ranks)
        better = r[:, None] < r[None, :]
        n = int(better.sum())
        if n == 0:
            continue
        diff = (s[:, None] - s[None, :])[better]
        hits += float(np.sum(diff > 0)) + 0.5 * float(np.sum(diff == 0))
        total += n
    if total == 0:
        raise NoPairs("no pairs to evaluate")
    return hits / total


def top1_accuracy(model, queries: Sequence[Query], threshold: float = 0.5) -> float:
    """Fraction of queries whose top-scored candidate overlaps the truth by more than ``threshold``."""
    hits = [float(q.overlaps[int(np.argmax(score(model, q.features)))] > threshold) for q in queries]
    return float(np.mean(hits))


def fold_indices(n: int, folds: int, seed: int, groups=None) -> list[np.ndarray]:
    """Shuffled k-fold split of ``range(n)``.

    With ``groups`` (one label per item) whole groups are assigned to
    folds, so no group is split between training and validation.
    """
    rng = np.random.default_rng(seed)
    if groups is None:
        return [np.sort(f) for f in np.array_split(rng.permutation(n), folds)]
    groups = np.asarray(groups)
    labels = np.unique(groups)
    if labels.size < folds:
        raise TooFewImages(f"{labels.size} groups cannot be split into {folds} folds")
    parts = np.array_split(rng.permutation(labels), folds)
    return [np.flatnonzero(np.isin(groups, p)) for p in parts]


def _validation_score(model, val: Sequence[Query]):
    """``(primary, tie_break)`` score of a model on held-out queries."""
    pairwise = pairwise_accuracy(model, val)
    if all(q.overlaps is not None for q in val) and any(np.any(q.overlaps > 0.5) for q in val):
        return top1_accuracy(model, val), pairwise
    return pairwise, pairwise


def cross_validate(
    queries: Sequence[Query],
    config: TrainConfig = TrainConfig(),
    gt_mode=GtMode.APPROXIMATE,
    groups=None,
):
    """Choose C by k-fold cross-validation over images.

    Each fold is scored by held-out annotation accuracy, or by pairwise
    accuracy when no held-out candidate overlaps its ground truth by more
    than 0.5. Returns ``(best_c, {c: mean score})``. Equal scores are
    broken by mean held-out pairwise accuracy, then toward the smaller C. ``groups`` (e.g. class labels) keeps each group within a
    single fold.
    """
    if len(queries) < config.folds:
        raise TooFewImages(f"{len(queries)} images cannot be split into {config.folds} folds")
    folds = fold_indices(len(queries), config.folds, config.seed, groups)
    scores, tie_break = {}, {}
    for c in sorted(config.c_grid):
        fold_scores = []
        for k, val_idx in enumerate(folds):
            held = set(val_idx.tolist())
            train_q = [q for i, q in enumerate(queries) if i not in held]
            val_q = [queries[i] for i in val_idx]
            model = train(train_q, c, config, gt_mode)
            fold_scores.append(_validation_score(model, val_q))
        primary, secondary = np.mean(fold_scores, axis=0)
        scores[c], tie_break[c] = float(primary), float(secondary)
        log.info("C=%g: cv score %.4f (pairwise %.4f)", c, scores[c], tie_break[c])
    best_c = None
    for c in sorted(scores):
        if best_c is None or (scores[c], tie_break[c]) > (scores[best_c], tie_break[best_c]):
            best_c = c
    return best_c, scores
