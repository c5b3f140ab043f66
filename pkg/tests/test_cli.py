import json
import subprocess
import sys

import numpy as np
import pytest

from rankxfer.annotator import annotate
from rankxfer.baselines import objectness_baseline
from rankxfer.cli import build_parser, main
from rankxfer.dataio import load_dataset, load_model
from rankxfer.evaluation import evaluate
from rankxfer.features import make_queries
from rankxfer.ranksvm import train


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "data.jsonl"
    assert main(["synth", "--out", str(path), "--n-images", "24", "--n-classes", "4", "--seed", "2"]) == 0
    return path


def read_results(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestSynthAndTrain:
    def test_manifest_written(self, dataset):
        manifest = json.loads((dataset.parent / "data.jsonl.manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["seed"] == 2
        assert manifest["outputs"] == [str(dataset)]
        assert manifest["config"]["n_images"] == 24
        assert "wall_clock_seconds" in manifest

    def test_train_round_trips(self, dataset, tmp_path, capsys):
        out = tmp_path / "m.json"
        assert main(["train", str(dataset), "--c", "2", "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "objective:" in printed and "iterations:" in printed and "C: 2" in printed
        model = load_model(out)
        assert model == train(make_queries(load_dataset(dataset)), 2.0)
        manifest = json.loads((tmp_path / "m.json.manifest.json").read_text())
        assert str(dataset) in manifest["input_digests"]

    def test_singleton_grid_equals_fixed_c(self, dataset, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["train", str(dataset), "--c", "0.5", "--out", str(a)])
        main(["train", str(dataset), "--cv", "--c-grid", "0.5", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_gt_modes_differ(self, dataset, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["train", str(dataset), "--gt-mode", "exact", "--out", str(a)])
        main(["train", str(dataset), "--gt-mode", "approximate", "--out", str(b)])
        wa, wb = load_model(a).weights, load_model(b).weights
        assert not np.allclose(wa, wb)

    def test_pair_cap(self, dataset, tmp_path):
        out = tmp_path / "m.json"
        assert main(["train", str(dataset), "--pair-cap", "20", "--out", str(out)]) == 0
        assert load_model(out).training_stats.n_pairs == 24 * 20


class TestAnnotate:
    @pytest.fixture
    def model(self, dataset, tmp_path):
        path = tmp_path / "m.json"
        main(["train", str(dataset), "--out", str(path)])
        return path

    def test_pure_model(self, dataset, model, tmp_path):
        out = tmp_path / "r.jsonl"
        assert main(["annotate", str(model), str(dataset), "--out", str(out)]) == 0
        m = load_model(model)
        expected = [annotate(m, im).to_dict() for im in load_dataset(dataset)]
        assert read_results(out) == expected

    def test_alpha_zero_is_objectness(self, dataset, model, tmp_path):
        fused, base = tmp_path / "f.jsonl", tmp_path / "o.jsonl"
        main(["annotate", str(model), str(dataset), "--fuse-objectness", "0", "--out", str(fused)])
        main(["baseline", str(dataset), "--kind", "objectness", "--out", str(base)])
        picks = [r["chosen_index"] for r in read_results(fused)]
        assert picks == [r["chosen_index"] for r in read_results(base)]
        assert picks == [objectness_baseline(im).chosen_index for im in load_dataset(dataset)]

    def test_fuse_with_external_scores(self, dataset, model, tmp_path):
        scores = tmp_path / "s.jsonl"
        images = load_dataset(dataset)
        rng = np.random.default_rng(0)
        ext = {im.image_id: rng.normal(size=len(im.candidates)) for im in images}
        scores.write_text("".join(json.dumps({"image_id": k, "scores": v.tolist()}) + "\n" for k, v in ext.items()))
        out = tmp_path / "f.jsonl"
        assert main(["fuse", str(model), str(dataset), "--scores", str(scores), "--alpha", "0", "--out", str(out)]) == 0
        assert [r["chosen_index"] for r in read_results(out)] == [int(np.argmax(ext[im.image_id])) for im in images]

    def test_dimension_mismatch_exit_code(self, model, tmp_path, capsys):
        other = tmp_path / "d.jsonl"
        main(["synth", "--out", str(other), "--dim", "30", "--n-images", "3"])
        assert main(["annotate", str(model), str(other), "--out", str(tmp_path / "x")]) == 1
        err = capsys.readouterr().err
        assert "DimensionMismatch" in err and "50" in err and "30" in err

    def test_evaluate(self, dataset, model, tmp_path, capsys):
        res, rep = tmp_path / "r.jsonl", tmp_path / "rep.json"
        main(["annotate", str(model), str(dataset), "--out", str(res)])
        capsys.readouterr()
        assert main(["evaluate", str(res), str(dataset), "--out", str(rep)]) == 0
        assert "overall" in capsys.readouterr().out
        report = json.loads(rep.read_text())
        m = load_model(model)
        images = load_dataset(dataset)
        assert report == evaluate([annotate(m, im) for im in images], images).to_dict()


class TestBaseline:
    def test_tworank_model_loads_in_annotate(self, dataset, tmp_path):
        model, out = tmp_path / "t.json", tmp_path / "r.jsonl"
        assert main(["baseline", str(dataset), "--kind", "tworank", "--model-out", str(model), "--out", str(out)]) == 0
        again = tmp_path / "again.jsonl"
        assert main(["annotate", str(model), str(dataset), "--out", str(again)]) == 0
        assert read_results(out) == read_results(again)

    @pytest.mark.parametrize("kind", ["generic", "nonranking"])
    def test_binary_kinds(self, dataset, tmp_path, kind):
        model, out = tmp_path / "b.json", tmp_path / "r.jsonl"
        assert main(["baseline", str(dataset), "--kind", kind, "--model-out", str(model), "--out", str(out)]) == 0
        assert load_model(model).feature_space.value == ("raw_histogram" if kind == "generic" else "diff_vector")
        assert main(["annotate", str(model), str(dataset), "--fuse-objectness", "1", "--out", str(tmp_path / "f")]) == 0

    def test_cross_validate_command(self, dataset, tmp_path, capsys):
        out = tmp_path / "cv.json"
        assert main(["cross-validate", str(dataset), "--c-grid", "0.1", "1", "--folds", "3", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["selected_c"] in (0.1, 1.0) and len(doc["scores"]) == 2


class TestSplitProtocol:
    def test_deterministic_and_matches_library(self, dataset, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["split-protocol", str(dataset), "--n-aux", "2", "--trials", "3", "--seed", "5"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        report = json.loads(a.read_text())
        assert len(report["trials"]) == 3 and report["n_aux"] == 2

    def test_single_trial_equals_train_annotate_evaluate(self, dataset, tmp_path):
        out = tmp_path / "s.json"
        main(["split-protocol", str(dataset), "--n-aux", "2", "--trials", "1", "--seed", "1", "--out", str(out)])
        trial = json.loads(out.read_text())["trials"][0]
        images = load_dataset(dataset)
        aux = [im for im in images if im.class_label in trial["auxiliary_classes"]]
        tgt = [im for im in images if im.class_label in trial["target_classes"]]
        model = train(make_queries(aux), 1.0)
        assert trial["report"] == evaluate([annotate(model, im) for im in tgt], tgt).to_dict()

    def test_insufficient_classes(self, dataset):
        assert main(["split-protocol", str(dataset)]) == 1  # default n_aux 10 > 4 classes


class TestExitCodes:
    def test_usage_errors(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main(["train", "x", "--c", "1", "--cv", "--out", "y"])
        assert exc.value.code == 2

    def test_bad_alpha(self, dataset, tmp_path):
        model = tmp_path / "m.json"
        main(["train", str(dataset), "--out", str(model)])
        assert main(["annotate", str(model), str(dataset), "--fuse-objectness", "1.5", "--out", str(tmp_path / "r")]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["train", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "m")]) == 1

    def test_help_lists_commands(self):
        text = build_parser().format_help()
        for cmd in ("synth", "train", "cross-validate", "annotate", "fuse", "baseline", "evaluate", "split-protocol"):
            assert cmd in text

    def test_console_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "rankxfer.cli", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0 and "split-protocol" in proc.stdout
