"""Versioned JSON documents for ranking and binary models.

Floats are written with Python's shortest round-trip repr, so loading a
saved model gives back bit-identical weights.
"""

from __future__ import annotations

import json
from dataclasses import asdict

from ..baselines import BinaryModel
from ..errors import ParseError, VersionMismatch
from ..ranksvm import RankModel, TrainingStats

FORMAT_NAME = "rankxfer-model"
FORMAT_VERSION = 1


def _stats_to_dict(stats):
    if stats is None:
        return None
    d = asdict(stats)
    d["objective_trace"] = list(stats.objective_trace)
    return d


def _stats_from_dict(d):
    if d is None:
        return None
    return TrainingStats(
        iterations=int(d["iterations"]),
        objective=float(d["objective"]),
        gradient_norm=float(d["gradient_norm"]),
        stopped_by=str(d["stopped_by"]),
        n_pairs=int(d["n_pairs"]),
        objective_trace=tuple(float(v) for v in d.get("objective_trace", ())),
    )


def model_to_dict(model) -> dict:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "dim": model.dim,
        "weights": model.weights.tolist(),
        "c": model.c,
        "training_stats": _stats_to_dict(model.training_stats),
    }
    if isinstance(model, BinaryModel):
        doc.update(kind="binary", bias=model.bias, feature_space=model.feature_space.value)
    else:
        doc.update(kind="rank", gt_mode=model.gt_mode.value)
    return doc


def model_from_dict(doc: dict):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ParseError("not a model document")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {doc.get('version')!r}, expected {FORMAT_VERSION}")
    try:
        weights = [float(v) for v in doc["weights"]]
        if len(weights) != int(doc["dim"]):
            raise ParseError(f"dim {doc['dim']} disagrees with {len(weights)} weights")
        stats = _stats_from_dict(doc.get("training_stats"))
        if doc["kind"] == "binary":
            return BinaryModel(weights, float(doc["bias"]), float(doc["c"]), doc["feature_space"], stats)
        if doc["kind"] == "rank":
            return RankModel(weights, float(doc["c"]), doc["gt_mode"], stats)
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed model document: {exc}") from None
    raise ParseError(f"unknown model kind {doc['kind']!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}", line=exc.lineno) from None
    return model_from_dict(doc)
