# Boxes, overlap and the rank labels a ranking model is trained on.
#
# Run: python3 demos/01_boxes_and_ranks.py
import numpy as np

from rankxfer.features import build_training_features, diff_vector, l1_normalize
from rankxfer.geometry import BBox, assign_ranks, center_distance, iou
from rankxfer.records import Candidate, ImageRecord

# Boxes are half-open: (x1, y1, x2, y2) covers x1 <= x < x2.
truth = BBox(40, 40, 80, 80)
candidates = [
    BBox(42, 38, 82, 78),    # nearly the object
    BBox(40, 40, 80, 55),    # a slice of it
    BBox(90, 45, 110, 65),   # background right next to it
    BBox(0, 150, 20, 170),   # background far away
    BBox(60, 60, 120, 120),  # partial overlap
]

print("candidate   iou    centre distance")
for i, box in enumerate(candidates):
    print(f"{i:>9}  {iou(box, truth):.3f}  {center_distance(box, truth):8.2f}")

# Overlapping candidates come first, by decreasing overlap. Candidates
# that miss the object are ordered by how close their centre is, so the
# patch beside the object outranks the one in the far corner.
ranks = assign_ranks(candidates, truth)
print("ranks:", ranks.tolist())

# Appearance: each region is a bag-of-words histogram. The transferable
# feature is the absolute difference between a region's normalised
# histogram and a reference histogram.
rng = np.random.default_rng(0)
object_words = np.r_[8.0, 6.0, 5.0, 0.0, 0.0, 0.0]
hists = []
for box in candidates:
    a = iou(box, truth)
    clutter = rng.gamma(2.0, size=6) * np.r_[0, 0, 0, 1, 1, 1]
    hists.append(a * object_words + (1 - a) * clutter + 0.01)

print("\nnormalised histogram of candidate 0:", np.round(l1_normalize(hists[0]), 3))
print("difference to the object's own histogram:", np.round(diff_vector(hists[0], object_words), 3))

image = ImageRecord(
    "demo", "thing", 200, 200,
    [Candidate(b, h) for b, h in zip(candidates, hists)],
    [truth],
)
feats, ranks = build_training_features(image)  # reference = mean candidate histogram
print("\nfeature rows (reference = mean of the candidates):")
for r, row in sorted(zip(ranks, feats), key=lambda t: t[0]):
    print(f"rank {r}: L1 = {row.sum():.3f}  {np.round(row, 3)}")
