import numpy as np
import pytest

from rankxfer.dataio import SynthConfig, synth_generate
from rankxfer.geometry import BBox
from rankxfer.records import Candidate, ImageRecord


def make_image(boxes, hists, gt=None, image_id="img", class_label="a", objectness=None,
               gt_histogram=None, width=100, height=100, difficult=None):
    """Small hand-built record; boxes and gt given as 4-tuples."""
    if objectness is None:
        objectness = [None] * len(boxes)
    cands = [Candidate(BBox(*b), np.asarray(h, float), o) for b, h, o in zip(boxes, hists, objectness)]
    gts = [] if gt is None else [BBox(*g) for g in gt]
    return ImageRecord(image_id, class_label, width, height, cands, gts, gt_histogram, difficult)


@pytest.fixture(scope="session")
def planted():
    """Default-sized planted dataset and its oracle (noise 0.05)."""
    return synth_generate(SynthConfig(seed=0))


@pytest.fixture(scope="session")
def noiseless():
    return synth_generate(SynthConfig(seed=1, noise_sigma=0.0))
