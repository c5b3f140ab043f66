import numpy as np
import pytest

from rankxfer.annotator import AnnotationResult, annotate
from rankxfer.dataio import SynthConfig, synth_generate
from rankxfer.errors import InsufficientClasses, MissingGroundTruth
from rankxfer.evaluation import (
    MethodOptions,
    build_annotator,
    evaluate,
    format_eval_table,
    format_split_table,
    is_correct,
    run_split_protocol,
    split_classes,
)
from rankxfer.features import make_queries
from rankxfer.geometry import BBox
from rankxfer.ranksvm import TrainConfig, train

from conftest import make_image


def pick(image_id, box, index=0):
    return AnnotationResult(image_id, index, BBox(*box), (0.0,))


class TestIsCorrect:
    def test_identical(self):
        assert is_correct(BBox(0, 0, 2, 2), BBox(0, 0, 2, 2))

    def test_exactly_half_is_wrong(self):
        assert not is_correct(BBox(0, 0, 2, 1), BBox(0, 0, 1, 1))

    def test_disjoint(self):
        assert not is_correct(BBox(0, 0, 1, 1), BBox(3, 3, 4, 4))

    def test_any_ground_truth(self):
        assert is_correct(BBox(10, 10, 12, 12), [BBox(0, 0, 1, 1), BBox(10, 10, 12, 12)])


class TestEvaluate:
    def test_half_correct(self):
        ims = [make_image([(0, 0, 2, 2)], [[1]], gt=[(0, 0, 2, 2)], image_id=str(i)) for i in range(4)]
        anns = [pick("0", (0, 0, 2, 2)), pick("1", (5, 5, 6, 6)), pick("2", (0, 0, 2, 2)), pick("3", (0, 0, 2, 1))]
        report = evaluate(anns, ims)
        assert report.per_class_accuracy == {"a": 50.0}
        assert report.overall_accuracy == 50.0

    def test_recomputes_correctness(self):
        im = make_image([(0, 0, 2, 2)], [[1]], gt=[(0, 0, 2, 2)])
        ann = AnnotationResult("img", 0, BBox(0, 0, 2, 2), (0.0,), correct=False)
        assert evaluate([ann], [im]).overall_accuracy == 100.0

    def test_scripted_recount(self):
        rng = np.random.default_rng(9)
        ims, anns = [], []
        for i in range(10):
            cls = "abc"[i % 3]
            ims.append(make_image([(0, 0, 4, 4)], [[1]], gt=[(0, 0, 4, 4)], image_id=str(i), class_label=cls))
            w = rng.uniform(1, 4)
            anns.append(pick(str(i), (0, 0, w, 4)))  # iou = w / 4
        hits = {c: [] for c in "abc"}
        for i, a in enumerate(anns):
            hits["abc"[i % 3]].append(a.chosen_box.x2 / 4 > 0.5)
        report = evaluate(anns, ims)
        for c in "abc":
            assert report.per_class_accuracy[c] == pytest.approx(100 * np.mean(hits[c]))
            assert report.n_images[c] == len(hits[c])
        all_hits = sum(hits.values(), [])
        assert report.overall_accuracy == pytest.approx(100 * np.mean(all_hits))
        weighted = sum(report.per_class_accuracy[c] * report.n_images[c] for c in "abc") / 10
        assert report.overall_accuracy == pytest.approx(weighted)
        assert "overall" in format_eval_table(report)

    def test_classes_without_images_omitted(self):
        ims = [make_image([(0, 0, 2, 2)], [[1]], gt=[(0, 0, 2, 2)], image_id="x", class_label="a"),
               make_image([(0, 0, 2, 2)], [[1]], gt=[(0, 0, 2, 2)], image_id="y", class_label="b")]
        assert list(evaluate([pick("x", (0, 0, 2, 2))], ims).per_class_accuracy) == ["a"]

    def test_needs_ground_truth(self):
        im = make_image([(0, 0, 2, 2)], [[1]])
        with pytest.raises(MissingGroundTruth):
            evaluate([pick("img", (0, 0, 2, 2))], [im])
        with pytest.raises(MissingGroundTruth):
            evaluate([pick("nope", (0, 0, 2, 2))], [im])

    def test_difficult_boxes_ignored(self):
        im = make_image([(0, 0, 2, 2)], [[1]], gt=[(0, 0, 2, 2), (5, 5, 9, 9)], difficult=[True, False])
        assert evaluate([pick("img", (0, 0, 2, 2))], [im]).overall_accuracy == 0.0


@pytest.fixture(scope="module")
def four_class():
    return synth_generate(SynthConfig(n_images=40, n_classes=4, seed=5, noise_sigma=0.2))[0]


class TestSplitProtocol:
    def test_splits_partition_classes(self):
        classes = [f"c{i}" for i in range(6)]
        aux, tgt = split_classes(classes, 2, 0, 1)
        assert len(aux) == 2 and set(aux) | set(tgt) == set(classes) and not set(aux) & set(tgt)
        assert split_classes(classes, 2, 0, 1) == (aux, tgt)

    def test_single_trial_is_one_evaluation(self, four_class):
        report = run_split_protocol(four_class, 2, 1, 3)
        aux_cls, tgt_cls = split_classes(sorted({r.class_label for r in four_class}), 2, 3, 0)
        aux = [r for r in four_class if r.class_label in aux_cls]
        tgt = [r for r in four_class if r.class_label in tgt_cls]
        model = train(make_queries(aux), 1.0)
        direct = evaluate([annotate(model, im) for im in tgt], tgt)
        assert report.trials[0].report == direct
        assert report.overall_mean == direct.overall_accuracy
        assert report.overall_std == 0.0

    def test_scripted_aggregation(self, four_class):
        report = run_split_protocol(four_class, 2, 3, 11, method="objectness")
        per_class = {}
        overall = []
        for t in range(3):
            aux_cls, tgt_cls = split_classes(sorted({r.class_label for r in four_class}), 2, 11, t)
            tgt = [r for r in four_class if r.class_label in tgt_cls]
            hits = {}
            for im in tgt:
                j = int(np.argmax([c.objectness for c in im.candidates]))
                hits.setdefault(im.class_label, []).append(is_correct(im.candidates[j].box, im.ground_truth))
            for c, h in hits.items():
                per_class.setdefault(c, []).append(100 * np.mean(h))
            overall.append(100 * np.mean(sum(hits.values(), [])))
        assert set(report.per_class_accuracy) == set(per_class)
        for c, accs in per_class.items():
            assert report.per_class_accuracy[c] == pytest.approx(np.mean(accs))
        assert report.class_average == pytest.approx(np.mean([np.mean(v) for v in per_class.values()]))
        assert report.overall_mean == pytest.approx(np.mean(overall))
        assert report.overall_std == pytest.approx(np.std(overall, ddof=1))
        assert "class average" in format_split_table(report)

    def test_deterministic(self, four_class):
        a = run_split_protocol(four_class, 2, 2, 1, method="ranking")
        b = run_split_protocol(four_class, 2, 2, 1, method="ranking")
        assert a.to_dict() == b.to_dict()

    @pytest.mark.parametrize("method", ["tworank", "nonranking", "generic", "fused"])
    def test_every_method_runs(self, four_class, method):
        report = run_split_protocol(four_class, 2, 1, 0, method=method)
        assert 0.0 <= report.overall_mean <= 100.0

    def test_cross_validated_methods(self, four_class):
        opts = MethodOptions(cv=True, config=TrainConfig(c_grid=(0.1, 10.0), folds=2))
        for method in ("ranking", "nonranking"):
            fn, c = build_annotator(method, four_class[:20], opts)
            assert c in (0.1, 10.0)
        opts = MethodOptions(cv=True, cv_by_class=True, config=TrainConfig(c_grid=(0.1, 10.0), folds=2))
        assert build_annotator("ranking", four_class, opts)[1] in (0.1, 10.0)

    def test_too_few_classes(self, four_class):
        with pytest.raises(InsufficientClasses):
            run_split_protocol(four_class, 4, 1, 0)
        with pytest.raises(ValueError):
            run_split_protocol(four_class, 2, 0, 0)

    def test_unknown_method(self, four_class):
        with pytest.raises(ValueError):
            build_annotator("nope", four_class)
