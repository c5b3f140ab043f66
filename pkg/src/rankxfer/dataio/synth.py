"""Synthetic candidate-region datasets with a planted ranking structure.

The vocabulary has two parts:

* class words, split into one block per class. A class's object,
  context and scene distributions all live in its block, so nothing
  learned about them carries over to another class;
* clutter words: every candidate gets its own clutter word (shared only
  when there are more candidates than clutter words).

A candidate with overlap ``iou`` is the convex mixture

    iou * object + (1 - iou) * (k * context + (1 - k) * (s * clutter + (1 - s) * scene))

where ``k`` is a context weight (``rho`` for overlapping boxes and
``rho * exp(-distance / scale)`` for disjoint ones) and ``s`` is the
image's clutter strength, ``hidden_signal_strength`` shrunk by a random
factor in ``[1 - signal_spread, 1]``. All histograms carry the same word
mass, so L1 normalisation recovers the mixture exactly.

A candidate's clutter share ``s * (1 - iou) * (1 - k)`` falls strictly
with overlap and, among disjoint boxes, rises strictly with distance.
Without noise, scoring difference vectors with weight -1 on the clutter
words and 0 elsewhere therefore reproduces the rank labels exactly
whenever each candidate has a private clutter word. This construction is
a test oracle, not a model of real images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import BBox, center_distance, iou
from ..records import Candidate, ImageRecord

PROFILES = ("graded", "uniform")


@dataclass(frozen=True)
class SynthConfig:
    n_images: int = 50
    candidates_per_image: int = 20
    dim: int = 50
    noise_sigma: float = 0.05
    overlap_profile: str = "graded"
    hidden_signal_strength: float = 0.8
    seed: int = 0
    n_classes: int = 4
    context_weight: float = 0.5
    objectness_noise: float = 0.3
    words_per_region: float = 500.0
    image_size: tuple = (200, 320)
    signal_spread: float = 0.0
    near_fraction: float = 0.3
    noise_floor: float = 0.3

    def __post_init__(self):
        for name in ("n_images", "candidates_per_image", "n_classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.dim < 3:
            raise ValueError("dim must be at least 3")
        if self.noise_sigma < 0 or self.objectness_noise < 0 or self.noise_floor < 0:
            raise ValueError("noise levels must be non-negative")
        if self.overlap_profile not in PROFILES:
            raise ValueError(f"overlap_profile must be one of {PROFILES}")
        if not 0 < self.hidden_signal_strength <= 1:
            raise ValueError("hidden_signal_strength must lie in (0, 1]")
        if not 0 <= self.context_weight < 1:
            raise ValueError("context_weight must lie in [0, 1)")
        if not 0 <= self.signal_spread < 1:
            raise ValueError("signal_spread must lie in [0, 1)")
        if not 0 <= self.near_fraction <= 0.7:
            raise ValueError("near_fraction must lie in [0, 0.7]")
        if self.words_per_region <= 0:
            raise ValueError("words_per_region must be positive")


@dataclass(frozen=True, eq=False)
class SynthOracle:
    """What the generator knows: planted weights and per-image truths."""

    weights: np.ndarray
    clutter_words: np.ndarray
    overlaps: dict = field(default_factory=dict)
    distances: dict = field(default_factory=dict)
    ranks: dict = field(default_factory=dict)
    best_index: dict = field(default_factory=dict)


def word_blocks(dim: int, candidates: int):
    """Split ``range(dim)`` into class words and clutter words."""
    n_clutter = max(1, min(candidates, dim // 2))
    words = np.arange(dim)
    return words[: dim - n_clutter], words[dim - n_clutter:]


def _clip_box(cx, cy, w, h, width, height):
    w = min(max(w, 2.0), width)
    h = min(max(h, 2.0), height)
    x1 = min(max(cx - w / 2, 0.0), width - w)
    y1 = min(max(cy - h / 2, 0.0), height - h)
    return BBox(x1, y1, x1 + w, y1 + h)


def _jittered(rng, gt, spread, width, height):
    cx, cy = gt.center
    return _clip_box(
        cx + rng.normal(0, spread) * gt.width,
        cy + rng.normal(0, spread) * gt.height,
        gt.width * math.exp(rng.normal(0, spread)),
        gt.height * math.exp(rng.normal(0, spread)),
        width, height,
    )


def _random_box(rng, width, height):
    w = rng.uniform(0.1, 0.5) * width
    h = rng.uniform(0.1, 0.5) * height
    return _clip_box(rng.uniform(0, width), rng.uniform(0, height), w, h, width, height)


def _disjoint_box(rng, gt, width, height, tries=100):
    box = _random_box(rng, width, height)
    for _ in range(tries):
        if iou(box, gt) == 0.0:
            return box
        box = _random_box(rng, width, height)
    return box


def _candidate_boxes(rng, cfg, gt, width, height):
    boxes = []
    for _ in range(cfg.candidates_per_image):
        if cfg.overlap_profile == "uniform":
            boxes.append(_random_box(rng, width, height))
            continue
        kind = rng.choice(3, p=(cfg.near_fraction, 0.7 - cfg.near_fraction, 0.3))
        if kind == 0:
            boxes.append(_jittered(rng, gt, 0.12, width, height))
        elif kind == 1:
            boxes.append(_jittered(rng, gt, 0.45, width, height))
        else:
            boxes.append(_disjoint_box(rng, gt, width, height))
    return boxes


def _oracle_ranks(ious, dists):
    # independent of geometry.assign_ranks: explicit sort keys
    keyed = sorted(
        range(len(ious)),
        key=lambda j: (0, -ious[j], j) if ious[j] > 0 else (1, dists[j], j),
    )
    ranks = np.empty(len(ious), dtype=np.int64)
    for r, j in enumerate(keyed, start=1):
        ranks[j] = r
    return ranks


def _noisy(rng, mix, sigma, floor):
    # multiplicative noise plus a small floor so empty words are not exactly zero
    if sigma == 0:
        return mix
    noise = sigma * (mix + floor / mix.shape[0]) * rng.standard_normal(mix.shape)
    return np.maximum(mix + noise, 0.0)


def _class_mixture(rng, words, base, dim, weight=0.8):
    out = np.zeros(dim)
    out[words] = rng.dirichlet(np.full(words.size, 2.0))
    return weight * base + (1 - weight) * out


def synth_generate(cfg: SynthConfig):
    """Generate ``(records, oracle)``; a pure function of ``cfg``."""
    rng = np.random.default_rng(cfg.seed)
    D, M = cfg.dim, cfg.candidates_per_image
    class_words, clutter_words = word_blocks(D, M)
    rho = cfg.context_weight

    blocks = np.array_split(class_words, min(cfg.n_classes, class_words.size))
    prototypes = []
    for c in range(cfg.n_classes):
        words = blocks[c % len(blocks)]
        protos = []
        for _ in range(3):  # object, context, scene
            p = np.zeros(D)
            p[words] = rng.dirichlet(np.full(words.size, 0.5))
            protos.append(p)
        prototypes.append((words, protos))

    planted = np.zeros(D)
    planted[clutter_words] = -1.0
    oracle = SynthOracle(planted, clutter_words)
    records = []
    for i in range(cfg.n_images):
        cls = i % cfg.n_classes
        width = int(rng.integers(cfg.image_size[0], cfg.image_size[1] + 1))
        height = int(rng.integers(cfg.image_size[0], cfg.image_size[1] + 1))
        gw, gh = rng.uniform(0.3, 0.6) * width, rng.uniform(0.3, 0.6) * height
        gt = _clip_box(rng.uniform(0, width), rng.uniform(0, height), gw, gh, width, height)
        boxes = _candidate_boxes(rng, cfg, gt, width, height)
        ious = np.array([iou(b, gt) for b in boxes])
        dists = np.array([center_distance(b, gt) for b in boxes])

        words, (obj_p, ctx_p, scene_p) = prototypes[cls]
        obj = _class_mixture(rng, words, obj_p, D)
        context = _class_mixture(rng, words, ctx_p, D)
        scene = _class_mixture(rng, words, scene_p, D)
        s = cfg.hidden_signal_strength * rng.uniform(1.0 - cfg.signal_spread, 1.0)
        own_word = clutter_words[rng.permutation(M) % clutter_words.size]

        scale = 0.25 * math.hypot(width, height)
        candidates = []
        for j, box in enumerate(boxes):
            k = rho if ious[j] > 0 else rho * math.exp(-dists[j] / scale)
            clutter = np.zeros(D)
            clutter[own_word[j]] = 1.0
            back = k * context + (1 - k) * (s * clutter + (1 - s) * scene)
            mix = ious[j] * obj + (1 - ious[j]) * back
            hist = cfg.words_per_region * _noisy(rng, mix, cfg.noise_sigma, cfg.noise_floor)
            score = ious[j] + cfg.objectness_noise * rng.standard_normal()
            candidates.append(Candidate(box, hist, float(score)))
        gt_hist = cfg.words_per_region * _noisy(rng, obj, cfg.noise_sigma, cfg.noise_floor)

        image_id = f"synth{cfg.seed}_{i:05d}"
        records.append(ImageRecord(
            image_id, f"class{cls:02d}", width, height, candidates, (gt,), gt_hist, (False,),
        ))
        oracle.overlaps[image_id] = ious
        oracle.distances[image_id] = dists
        oracle.ranks[image_id] = _oracle_ranks(ious.tolist(), dists.tolist())
        oracle.best_index[image_id] = int(np.argmax(ious))
    return records, oracle


def graded_benchmark(seed: int = 0) -> SynthConfig:
    """The graded transfer benchmark: 10 classes of 10 images each.

    Per-image clutter strength varies widely, which hurts classifiers that
    score candidates independently but leaves within-image orderings intact.
    """
    return SynthConfig(
        n_images=100,
        n_classes=10,
        noise_sigma=0.25,
        hidden_signal_strength=0.9,
        signal_spread=0.8,
        near_fraction=0.05,
        context_weight=0.2,
        seed=seed,
    )
