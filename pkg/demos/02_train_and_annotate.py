# Train a ranking model on some classes and annotate images of others.
#
# Run: python3 demos/02_train_and_annotate.py
import numpy as np

from rankxfer.annotator import FusionConfig, annotate, annotate_fused
from rankxfer.baselines import objectness_baseline
from rankxfer.dataio import SynthConfig, synth_generate
from rankxfer.evaluation import evaluate
from rankxfer.features import make_queries
from rankxfer.ranksvm import TrainConfig, cross_validate, pairwise_accuracy, train

# A synthetic dataset with a planted ranking: the generator knows every
# candidate's overlap and the weights that order candidates perfectly.
records, oracle = synth_generate(SynthConfig(n_images=80, n_classes=4, noise_sigma=0.1, seed=3))
aux = [r for r in records if r.class_label in ("class00", "class01")]
target = [r for r in records if r.class_label in ("class02", "class03")]
print(f"{len(aux)} auxiliary images with boxes, {len(target)} target images to annotate")

# Training only needs the auxiliary boxes. Every pair of candidates inside
# an image becomes a preference constraint.
queries = make_queries(aux)
best_c, scores = cross_validate(queries, TrainConfig(c_grid=(0.01, 0.1, 1.0, 10.0)))
print("cross-validation:", {c: round(s, 3) for c, s in scores.items()}, "-> C =", best_c)
model = train(queries, best_c)
stats = model.training_stats
print(f"trained on {stats.n_pairs} pairs in {stats.iterations} Newton steps, objective {stats.objective:.4g}")

# The model never saw the target classes; its weights should still look
# like the planted ones (negative on clutter words).
corr = np.corrcoef(model.weights, oracle.weights)[0, 1]
print(f"correlation with planted weights: {corr:.3f}")
print(f"pairwise ordering accuracy on target images: {pairwise_accuracy(model, make_queries(target)):.3f}")

# Annotation picks the best-scoring candidate; correctness means
# overlap with the true box strictly above 0.5.
ours = evaluate([annotate(model, im) for im in target], target)
obj = evaluate([objectness_baseline(im) for im in target], target)
print(f"\nranking model: {ours.overall_accuracy:.1f}% correct")
print(f"objectness:    {obj.overall_accuracy:.1f}% correct")

# Score fusion mixes the two after per-image min-max scaling.
for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
    fused = [annotate_fused(model, im, None, FusionConfig(alpha)) for im in target]
    print(f"alpha {alpha:.2f}: {evaluate(fused, target).overall_accuracy:.1f}%")
