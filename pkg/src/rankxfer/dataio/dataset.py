"""Line-delimited JSON dataset files.

One image per line::

    {"image_id": "000005", "class_label": "chair", "width": 500, "height": 375,
     "candidates": [{"box": [x1, y1, x2, y2], "objectness": 0.7,
                     "histogram": [..D counts..]}, ...],
     "ground_truth": [[x1, y1, x2, y2], ...], "difficult": [false, ...],
     "gt_histogram": [..] or null}

A histogram may also be written sparsely as
``{"dim": D, "indices": [...], "values": [...]}``. Boxes are half-open
continuous coordinates. Blank lines are ignored.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..errors import DimensionMismatch, ParseError, ValidationError
from ..geometry import BBox
from ..records import Candidate, ImageRecord

DEFAULT_MAX_CANDIDATES = 100


def _decode_histogram(raw, image_id, what):
    if isinstance(raw, dict):
        try:
            dim = int(raw["dim"])
            idx = np.asarray(raw["indices"], dtype=np.int64)
            vals = np.asarray(raw["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(image_id, f"malformed sparse {what}: {exc}") from None
        if idx.shape != vals.shape or idx.ndim != 1:
            raise ValidationError(image_id, f"sparse {what} has mismatched indices/values")
        if idx.size and (idx.min() < 0 or idx.max() >= dim):
            raise ValidationError(image_id, f"sparse {what} index out of range")
        hist = np.zeros(dim)
        hist[idx] = vals
    else:
        try:
            hist = np.asarray(raw, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError(image_id, f"{what} is not numeric") from None
        if hist.ndim != 1:
            raise ValidationError(image_id, f"{what} must be a flat list")
    if not np.all(np.isfinite(hist)) or np.any(hist < 0):
        raise ValidationError(image_id, f"{what} must be finite and non-negative")
    if hist.sum() == 0:
        raise ValidationError(image_id, f"{what} has zero L1 norm")
    return hist


def _encode_histogram(hist: np.ndarray, sparse: bool):
    if sparse:
        nz = np.flatnonzero(hist)
        return {"dim": int(hist.shape[0]), "indices": nz.tolist(), "values": hist[nz].tolist()}
    return hist.tolist()


def _box(raw, image_id, width, height):
    try:
        coords = [float(v) for v in raw]
    except (TypeError, ValueError):
        raise ValidationError(image_id, f"box {raw!r} is not numeric") from None
    if len(coords) != 4:
        raise ValidationError(image_id, f"box {raw!r} needs four coordinates")
    try:
        box = BBox(*coords)
    except ValueError as exc:
        raise ValidationError(image_id, str(exc)) from None
    if box.x1 < 0 or box.y1 < 0 or box.x2 > width or box.y2 > height:
        raise ValidationError(image_id, f"box {coords} lies outside the {width}x{height} image")
    return box


def parse_record(obj: dict, max_candidates: int = DEFAULT_MAX_CANDIDATES) -> ImageRecord:
    """Validate one decoded JSON object and build an :class:`ImageRecord`."""
    if not isinstance(obj, dict):
        raise ValidationError(None, "record is not a JSON object")
    image_id = obj.get("image_id")
    if not isinstance(image_id, str):
        raise ValidationError(image_id, "image_id must be a string")
    try:
        class_label = str(obj["class_label"])
        width, height = int(obj["width"]), int(obj["height"])
        raw_cands = obj["candidates"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(image_id, f"missing or malformed field: {exc}") from None
    if width <= 0 or height <= 0:
        raise ValidationError(image_id, "width and height must be positive")
    if not isinstance(raw_cands, list) or not 1 <= len(raw_cands) <= max_candidates:
        raise ValidationError(image_id, f"need between 1 and {max_candidates} candidates")

    candidates = []
    for j, rc in enumerate(raw_cands):
        if not isinstance(rc, dict) or "box" not in rc or "histogram" not in rc:
            raise ValidationError(image_id, f"candidate {j} needs 'box' and 'histogram'")
        objectness = rc.get("objectness")
        if objectness is not None:
            objectness = float(objectness)
            if not math.isfinite(objectness):
                raise ValidationError(image_id, f"candidate {j} has non-finite objectness")
        candidates.append(Candidate(
            _box(rc["box"], image_id, width, height),
            _decode_histogram(rc["histogram"], image_id, f"candidate {j} histogram"),
            objectness,
        ))
    dims = {c.histogram.shape[0] for c in candidates}
    if len(dims) != 1:
        raise DimensionMismatch(f"image {image_id!r}: candidate histograms differ in dimension {sorted(dims)}")

    gt = [_box(b, image_id, width, height) for b in obj.get("ground_truth") or []]
    difficult = obj.get("difficult") or []
    if difficult and len(difficult) != len(gt):
        raise ValidationError(image_id, "difficult flags must match ground-truth boxes one to one")
    gt_hist = obj.get("gt_histogram")
    if gt_hist is not None:
        gt_hist = _decode_histogram(gt_hist, image_id, "gt_histogram")
        if gt_hist.shape[0] not in dims:
            raise DimensionMismatch(f"image {image_id!r}: gt_histogram dimension differs from candidates")
    return ImageRecord(image_id, class_label, width, height, candidates, gt, gt_hist, difficult)


def dump_record(record: ImageRecord, sparse: bool = False) -> dict:
    out = {
        "image_id": record.image_id,
        "class_label": record.class_label,
        "width": record.width,
        "height": record.height,
        "candidates": [],
        "ground_truth": [list(b.as_tuple()) for b in record.ground_truth],
        "difficult": list(record.difficult),
        "gt_histogram": None if record.gt_histogram is None else _encode_histogram(record.gt_histogram, sparse),
    }
    for c in record.candidates:
        cand = {"box": list(c.box.as_tuple()), "histogram": _encode_histogram(c.histogram, sparse)}
        if c.objectness is not None:
            cand["objectness"] = c.objectness
        out["candidates"].append(cand)
    return out


def load_dataset(
    path,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    drop_difficult_only: bool = False,
) -> list[ImageRecord]:
    """Read and validate a dataset file.

    With ``drop_difficult_only`` images whose every ground-truth box is
    flagged difficult are skipped.
    """
    records = []
    dim: Optional[int] = None
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), line=lineno) from None
            rec = parse_record(obj, max_candidates)
            if rec.image_id in seen:
                raise ValidationError(rec.image_id, "duplicate image_id")
            seen.add(rec.image_id)
            if dim is None:
                dim = rec.dim
            elif rec.dim != dim:
                raise DimensionMismatch(
                    f"line {lineno}: image {rec.image_id!r} has dimension {rec.dim}, expected {dim}"
                )
            if drop_difficult_only and rec.ground_truth and not rec.usable_ground_truth:
                continue
            records.append(rec)
    return records


def save_dataset(records: Iterable[ImageRecord], path, sparse: bool = False) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(dump_record(rec, sparse), separators=(",", ":")))
            fh.write("\n")
