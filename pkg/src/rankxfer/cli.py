"""Command-line interface: ``rankxfer <command> ...``.

Every command that writes an artifact also writes ``<artifact>.manifest.json``
recording the command, its configuration, SHA-256 digests of the inputs,
the seed, the output paths and the wall-clock time. Commands without an
output file print their manifest to standard error.

Exit codes: 0 on success, 1 on data or validation errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import baselines
from .annotator import AnnotationResult, FusionConfig, annotate, annotate_fused, fuse_scores, select
from .baselines import BinaryModel
from .dataio import (
    DEFAULT_MAX_CANDIDATES,
    SynthConfig,
    graded_benchmark,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    synth_generate,
)
from .errors import LengthMismatch, ParseError, RankXferError
from .evaluation import (
    METHODS,
    MethodOptions,
    cross_validate_method,
    evaluate,
    format_eval_table,
    format_split_table,
    run_split_protocol,
)
from .features import GtMode, make_queries
from .ranksvm import DEFAULT_C_GRID, TrainConfig, cross_validate, train

log = logging.getLogger("rankxfer")

BASELINE_KINDS = ("generic", "tworank", "nonranking", "objectness")


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, GtMode):
        return value.value
    if isinstance(value, np.generic):
        return value.item()
    return value


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


class Run:
    """Collects manifest fields for one invocation."""

    def __init__(self, args):
        self.args = args
        self.start = time.perf_counter()
        self.inputs = {}
        self.outputs = []
        self.config = {}

    def input(self, path):
        self.inputs[str(path)] = _digest(path)
        return path

    def output(self, path):
        if path is not None:
            self.outputs.append(str(path))
        return path

    def finish(self):
        args = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "command": self.args.command,
            "arguments": _jsonable(args),
            "config": _jsonable(self.config),
            "input_digests": self.inputs,
            "seed": getattr(self.args, "seed", None),
            "outputs": self.outputs,
            "wall_clock_seconds": round(time.perf_counter() - self.start, 6),
        }
        if self.outputs:
            for out in self.outputs:
                _write_json(f"{out}.manifest.json", manifest)
        else:
            print(json.dumps(manifest, sort_keys=True), file=sys.stderr)


def _train_config(args) -> TrainConfig:
    grid = tuple(args.c_grid) if args.c_grid else DEFAULT_C_GRID
    return TrainConfig(
        c_grid=grid,
        folds=args.folds,
        max_iterations=args.max_iterations,
        pair_cap_per_image=getattr(args, "pair_cap", None),
        seed=args.seed,
    )


def _load(run, args, path):
    return load_dataset(run.input(path), max_candidates=args.max_candidates)


def _write_results(path, results) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(), separators=(",", ":")))
            fh.write("\n")


def _read_results(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(AnnotationResult.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}: {exc}", line=lineno) from None
    return out


def _read_scores(path):
    """Per-image external scores: JSON lines ``{"image_id": ..., "scores": [...]}``."""
    scores = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                scores[str(obj["image_id"])] = np.asarray(obj["scores"], dtype=float)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}: {exc}", line=lineno) from None
    return scores


def _annotate_one(model, image, fusion=None, external=None):
    if isinstance(model, BinaryModel):
        if fusion is not None:
            model_s = baselines.binary_features(model, image) @ model.weights + model.bias
            ext = image.objectness_scores() if external is None else external
            return select(image, fuse_scores(model_s, ext, fusion))
        return baselines.annotate_with_binary(model, image)
    if fusion is not None:
        return annotate_fused(model, image, external, fusion)
    return annotate(model, image)


def _print_eval(results, images):
    labelled = [im for im in images if im.has_ground_truth]
    if not labelled:
        return None
    ids = {im.image_id for im in labelled}
    report = evaluate([r for r in results if r.image_id in ids], labelled)
    sys.stdout.write(format_eval_table(report))
    return report


# commands


def cmd_synth(args, run):
    if args.benchmark:
        cfg = graded_benchmark(args.seed)
    else:
        cfg = SynthConfig(
            n_images=args.n_images,
            candidates_per_image=args.candidates,
            dim=args.dim,
            noise_sigma=args.noise_sigma,
            overlap_profile=args.profile,
            hidden_signal_strength=args.signal,
            n_classes=args.n_classes,
            seed=args.seed,
        )
    run.config = asdict(cfg)
    records, _ = synth_generate(cfg)
    save_dataset(records, run.output(args.out), sparse=args.sparse)
    _progress(f"wrote {len(records)} images to {args.out}")


def cmd_train(args, run):
    images = _load(run, args, args.dataset)
    config = _train_config(args)
    mode = GtMode(args.gt_mode)
    queries = make_queries(images, mode)
    if args.cv:
        groups = [im.class_label for im in images] if args.cv_by_class else None
        c, scores = cross_validate(queries, config, mode, groups)
        for k in sorted(scores):
            _progress(f"C={k:g}: cv score {scores[k]:.4f}")
    else:
        c = args.c
    run.config = {"train": asdict(config), "c": c, "gt_mode": mode.value}
    model = train(queries, c, config, mode)
    save_model(model, run.output(args.out))
    stats = model.training_stats
    print(f"C: {c:g}")
    print(f"objective: {stats.objective:.10g}")
    print(f"iterations: {stats.iterations}")
    print(f"stopped by: {stats.stopped_by}")
    print(f"pairs: {stats.n_pairs}")


def cmd_cross_validate(args, run):
    images = _load(run, args, args.dataset)
    config = _train_config(args)
    opts = MethodOptions(gt_mode=GtMode(args.gt_mode), cv_by_class=args.cv_by_class, config=config)
    run.config = {"train": asdict(config), "method": args.method, "gt_mode": args.gt_mode}
    best, scores = cross_validate_method(args.method, images, opts)
    for c in sorted(scores):
        print(f"C={c:g}\t{scores[c]:.6f}")
    print(f"selected C: {best:g}")
    if args.out:
        _write_json(run.output(args.out), {"method": args.method, "selected_c": best,
                                           "scores": {repr(c): s for c, s in sorted(scores.items())}})


def cmd_annotate(args, run):
    model = load_model(run.input(args.model))
    images = _load(run, args, args.dataset)
    fusion = None if args.fuse_objectness is None else FusionConfig(args.fuse_objectness)
    run.config = {"alpha": None if fusion is None else fusion.alpha}
    results = [_annotate_one(model, im, fusion) for im in images]
    _write_results(run.output(args.out), results)
    _print_eval(results, images)


def cmd_fuse(args, run):
    model = load_model(run.input(args.model))
    images = _load(run, args, args.dataset)
    external = _read_scores(run.input(args.scores))
    fusion = FusionConfig(args.alpha)
    run.config = {"alpha": fusion.alpha}
    results = []
    for im in images:
        if im.image_id not in external:
            raise LengthMismatch(f"no external scores for image {im.image_id!r}")
        results.append(_annotate_one(model, im, fusion, external[im.image_id]))
    _write_results(run.output(args.out), results)
    _print_eval(results, images)


def cmd_baseline(args, run):
    images = _load(run, args, args.dataset)
    config = _train_config(args)
    mode = GtMode(args.gt_mode)
    run.config = {"kind": args.kind, "train": asdict(config), "gt_mode": mode.value}
    if args.kind == "objectness":
        results = [baselines.objectness_baseline(im) for im in images]
    else:
        train_set = images if args.train is None else _load(run, args, args.train)
        opts = MethodOptions(c=args.c, gt_mode=mode, cv_by_class=args.cv_by_class, config=config)
        c = cross_validate_method(args.kind, train_set, opts)[0] if args.cv else args.c
        run.config["c"] = c
        if args.kind == "tworank":
            model = baselines.train_two_rank(train_set, c, config, mode)
        elif args.kind == "nonranking":
            model = baselines.train_nonranking_svm(train_set, c, config)
        else:
            model = baselines.train_generic_detector(train_set, c, config)
        if args.model_out:
            save_model(model, run.output(args.model_out))
        _progress(f"trained {args.kind} with C={c:g}")
        results = [_annotate_one(model, im) for im in images]
    _write_results(run.output(args.out), results)
    _print_eval(results, images)


def cmd_evaluate(args, run):
    results = _read_results(run.input(args.results))
    images = _load(run, args, args.dataset)
    report = evaluate(results, images)
    sys.stdout.write(format_eval_table(report))
    if args.out:
        _write_json(run.output(args.out), report.to_dict())


def cmd_split_protocol(args, run):
    images = _load(run, args, args.dataset)
    config = _train_config(args)
    opts = MethodOptions(
        c=args.c, cv=args.cv, gt_mode=GtMode(args.gt_mode), alpha=args.alpha,
        cv_by_class=args.cv_by_class, config=config,
    )
    run.config = {"train": asdict(config), "options": {k: v for k, v in asdict(opts).items() if k != "config"}}
    report = run_split_protocol(images, args.n_aux, args.trials, args.seed, args.method, opts, _progress)
    sys.stdout.write(format_split_table(report))
    if args.out:
        _write_json(run.output(args.out), report.to_dict())


# parser


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return value


def _add_common(p, seed=True):
    p.add_argument("--max-candidates", type=int, default=DEFAULT_MAX_CANDIDATES,
                   help="maximum candidates per image accepted when loading (default %(default)s)")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="random seed (default %(default)s)")


def _add_training(p, pair_cap=True):
    p.add_argument("--c-grid", type=_positive_float, nargs="+",
                   help="C values searched by cross-validation (default 1e-3 ... 1e3)")
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds (default %(default)s)")
    p.add_argument("--cv-by-class", action="store_true",
                   help="keep each class within one cross-validation fold")
    p.add_argument("--max-iterations", type=int, default=200,
                   help="optimizer iteration limit (default %(default)s)")
    p.add_argument("--gt-mode", choices=[m.value for m in GtMode], default=GtMode.APPROXIMATE.value,
                   help="reference histogram for training features (default %(default)s)")
    if pair_cap:
        p.add_argument("--pair-cap", type=int, default=None,
                       help="subsample at most this many preference pairs per image")


def _add_c_choice(p, required=False):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--c", type=_positive_float, default=1.0, help="regularization constant C (default 1)")
    g.add_argument("--cv", action="store_true", help="choose C by cross-validation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankxfer",
        description="Transfer a category-independent region ranking to new classes.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log optimizer progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("synth", help="generate a synthetic dataset with a planted ranking")
    p.add_argument("--out", required=True, help="dataset file to write")
    p.add_argument("--benchmark", action="store_true",
                   help="use the graded transfer benchmark preset (other shape flags ignored)")
    p.add_argument("--n-images", type=int, default=50)
    p.add_argument("--candidates", type=int, default=20, help="candidates per image")
    p.add_argument("--dim", type=int, default=50, help="histogram dimension")
    p.add_argument("--noise-sigma", type=float, default=0.05)
    p.add_argument("--profile", choices=("graded", "uniform"), default="graded", help="candidate overlap profile")
    p.add_argument("--signal", type=float, default=0.8, help="hidden signal strength in (0, 1]")
    p.add_argument("--n-classes", type=int, default=4)
    p.add_argument("--sparse", action="store_true", help="write sparse histograms")
    p.add_argument("--seed", type=int, default=0, help="random seed (default %(default)s)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a ranking model on images with ground truth")
    p.add_argument("dataset")
    p.add_argument("--out", required=True, help="model file to write")
    _add_c_choice(p)
    _add_training(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cross-validate", help="report the cross-validation score of every C")
    p.add_argument("dataset")
    p.add_argument("--method", choices=("ranking", "tworank", "nonranking", "generic"), default="ranking")
    p.add_argument("--out", help="JSON file for the scores")
    _add_training(p, pair_cap=False)
    _add_common(p)
    p.set_defaults(func=cmd_cross_validate)

    p = sub.add_parser("annotate", help="pick one candidate per image with a trained model")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--fuse-objectness", type=float, metavar="ALPHA",
                   help="fuse with objectness: ALPHA * model + (1 - ALPHA) * objectness")
    p.add_argument("--out", required=True, help="results file to write")
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("fuse", help="annotate by fusing model scores with external per-candidate scores")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--scores", required=True,
                   help='JSON lines of {"image_id": ..., "scores": [...]} in candidate order')
    p.add_argument("--alpha", type=float, default=0.5, help="weight of the model score (default %(default)s)")
    p.add_argument("--out", required=True, help="results file to write")
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("baseline", help="annotate with a baseline method")
    p.add_argument("dataset", help="images to annotate")
    p.add_argument("--kind", choices=BASELINE_KINDS, required=True)
    p.add_argument("--train", help="training images (default: the annotated dataset itself)")
    p.add_argument("--model-out", help="also save the trained model")
    p.add_argument("--out", required=True, help="results file to write")
    _add_c_choice(p)
    _add_training(p, pair_cap=False)
    _add_common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="score annotation results against ground truth")
    p.add_argument("results")
    p.add_argument("dataset")
    p.add_argument("--out", help="JSON report to write")
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("split-protocol", help="repeated random auxiliary/target class splits")
    p.add_argument("dataset")
    p.add_argument("--n-aux", type=int, default=10, help="auxiliary classes per trial (default %(default)s)")
    p.add_argument("--trials", type=int, default=10, help="number of trials (default %(default)s)")
    p.add_argument("--method", choices=METHODS, default="ranking")
    p.add_argument("--alpha", type=float, default=0.5, help="fusion weight for --method fused")
    p.add_argument("--out", help="JSON report to write")
    _add_c_choice(p)
    _add_training(p, pair_cap=False)
    _add_common(p)
    p.set_defaults(func=cmd_split_protocol)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(name)s: %(message)s")
    run = Run(args)
    try:
        args.func(args, run)
    except RankXferError as exc:
        print(f"rankxfer {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"rankxfer {args.command}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"rankxfer {args.command}: invalid argument: {exc}", file=sys.stderr)
        return 2
    run.finish()
    return 0


if __name__ == "__main__":
    sys.exit(main())
