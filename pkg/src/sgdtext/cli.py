"""Command-line driver: prepare, train, eval, crossval, gridsearch, compare.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Every run is reproducible from its --seed; wall-clock numbers live in
dedicated *_seconds JSON keys so rerun outputs differ only there.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import corpus, features, sgd
from .corpus import LabeledCorpus
from .evaluation import (
    CrossValidationError,
    confusion,
    cross_validate,
    cv_to_dict,
    per_class_metrics,
    render_class_report,
    render_cv_line,
    report_to_dict,
)
from .pipeline import FittedPipeline, PipelineConfig, fit_pipeline, predict_pipeline
from .resample import SmoteConfig
from .search import (
    DEFAULT_PARAMS,
    GridSpec,
    ParamSet,
    candidate_to_dict,
    compare_runs,
    grid_search,
    load_grid_spec,
    params_from_dict,
    render_grid_table,
)
from .seeds import substream
from .sgd import LossKind

EXIT_OK = 0
EXIT_DATA = 3
EXIT_NUMERIC = 4

LOSSES = {
    "svm": LossKind.HINGE,
    "logreg": LossKind.LOG,
    "perceptron": LossKind.PERCEPTRON,
}


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a fraction in (0, 1), got {text!r}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _ngram_pair(text: str) -> features.NgramRange:
    try:
        lo, hi = (int(part) for part in text.split(","))
        return features.NgramRange(lo, hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected LO,HI with 1 <= LO <= HI, got {text!r}") from exc


@dataclass
class RunConfig:
    """Validated flags shared by the model-running subcommands."""

    out_dir: Path
    seed: int
    loss_name: str
    loss: LossKind
    params: ParamSet
    epochs: int
    smote_config: SmoteConfig | None
    k: int
    jobs: int

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        params = ParamSet(
            ngram_range=args.ngram,
            norm=args.norm,
            use_idf=args.use_idf,
            smooth_idf=args.smooth_idf,
            penalty=args.penalty,
            alpha=args.alpha,
        )
        smote_config = SmoteConfig(k_neighbors=args.smote_k) if args.smote else None
        return cls(
            out_dir=Path(args.out),
            seed=args.seed,
            loss_name=args.loss,
            loss=LOSSES[args.loss],
            params=params,
            epochs=args.epochs,
            smote_config=smote_config,
            k=getattr(args, "k", 10),
            jobs=getattr(args, "jobs", 1),
        )

    def pipeline_config(self, params: ParamSet | None = None) -> PipelineConfig:
        params = params or self.params
        return PipelineConfig(
            ngram_range=params.ngram_range,
            norm=params.norm,
            use_idf=params.use_idf,
            smooth_idf=params.smooth_idf,
            penalty=params.penalty,
            alpha=params.alpha,
            loss=self.loss,
            epochs=self.epochs,
            smote=self.smote_config,
            seed=substream(self.seed, "pipeline"),
        )


def _require_files(*paths: Path) -> None:
    # Fail before any compute if an input is missing.
    for path in paths:
        if not path.is_file():
            raise FileNotFoundError(f"required file is missing: {path}")


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", "utf-8")


def _params_to_dict(params: ParamSet) -> dict:
    return {
        "ngram_range": [params.ngram_range.lo, params.ngram_range.hi],
        "norm": params.norm,
        "use_idf": params.use_idf,
        "smooth_idf": params.smooth_idf,
        "penalty": params.penalty,
        "alpha": params.alpha,
    }


def _load_prepared(out_dir: Path) -> tuple[LabeledCorpus, dict]:
    corpus_path = out_dir / "corpus.jsonl"
    manifest_path = out_dir / "split.json"
    _require_files(corpus_path, manifest_path)
    documents: list[list[str]] = []
    labels: list[int] = []
    with corpus_path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            documents.append([str(t) for t in row["tokens"]])
            labels.append(int(row["label"]))
    manifest = json.loads(manifest_path.read_text("utf-8"))
    loaded = LabeledCorpus(
        documents=documents,
        labels=labels,
        label_names={c: str(c) for c in sorted(set(labels))},
    )
    return loaded, manifest


def cmd_prepare(args: argparse.Namespace) -> int:
    input_path = Path(args.input)
    stop_path = Path(args.stopwords) if args.stopwords else None
    _require_files(*(p for p in (input_path, stop_path) if p is not None))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    stop_words = frozenset() if args.no_stopwords else corpus.load_stop_words(stop_path)
    result = corpus.load_corpus(input_path, corpus.SCHEMAS[args.schema], stop_words)
    loaded = result.corpus
    if len(loaded) < 2:
        raise corpus.CorpusError(
            f"only {len(loaded)} usable rows after cleaning; need at least 2"
        )
    plan = corpus.split(len(loaded), args.split, substream(args.seed, "split"), loaded.labels)

    with (out_dir / "corpus.jsonl").open("w", encoding="utf-8") as fh:
        for label, tokens in zip(loaded.labels, loaded.documents):
            fh.write(json.dumps({"label": label, "tokens": tokens}, sort_keys=True) + "\n")

    train_set = set(plan.train_indices)
    histogram: dict[str, dict[str, int]] = {}
    for cls in loaded.classes():
        histogram[str(cls)] = {"train": 0, "test": 0}
    for index, label in enumerate(loaded.labels):
        histogram[str(label)]["train" if index in train_set else "test"] += 1
    totals = {
        "train": len(plan.train_indices),
        "test": len(plan.test_indices),
    }
    _write_json(
        out_dir / "split.json",
        {
            "seed": args.seed,
            "train_fraction": args.split,
            "row_count": result.total_rows,
            "drop_count": result.dropped,
            "class_histogram": histogram,
            "totals": totals,
            "train_indices": plan.train_indices,
            "test_indices": plan.test_indices,
        },
    )

    lines = ["Class\tTraining Set\tTesting Set"]
    for cls in loaded.classes():
        row = histogram[str(cls)]
        lines.append(f"{cls}\t{row['train']}\t{row['test']}")
    lines.append(f"Totals\t{totals['train']}\t{totals['test']}")
    (out_dir / "histogram.txt").write_text("\n".join(lines) + "\n", "utf-8")

    print(
        f"prepared {len(loaded)} documents ({result.dropped} dropped) -> "
        f"{totals['train']} train / {totals['test']} test"
    )
    return EXIT_OK


def _fit_on_train(config: RunConfig) -> tuple[FittedPipeline, LabeledCorpus, dict, float]:
    loaded, manifest = _load_prepared(config.out_dir)
    train_indices = [int(i) for i in manifest["train_indices"]]
    started = time.perf_counter()
    fitted = fit_pipeline(
        [loaded.documents[i] for i in train_indices],
        [loaded.labels[i] for i in train_indices],
        config.pipeline_config(),
    )
    elapsed = time.perf_counter() - started
    return fitted, loaded, manifest, elapsed


def cmd_train(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    fitted, _, _, elapsed = _fit_on_train(config)
    features.save_tfidf(fitted.tfidf, config.out_dir / "tfidf.json")
    sgd.save_model(fitted.model, config.out_dir / "model.json")
    _write_json(
        config.out_dir / "train_meta.json",
        {
            "loss": config.loss_name,
            "params": _params_to_dict(config.params),
            "epochs": config.epochs,
            "smote": config.smote_config is not None,
            "seed": config.seed,
            "elapsed_seconds": elapsed,
        },
    )
    print(
        f"trained {config.loss_name} on {len(fitted.model.classes)} classes, "
        f"{fitted.model.feature_dim} features"
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    out_dir = config.out_dir
    _require_files(out_dir / "tfidf.json", out_dir / "model.json")
    loaded, manifest = _load_prepared(out_dir)
    tfidf = features.load_tfidf(out_dir / "tfidf.json")
    model = sgd.load_model(out_dir / "model.json")

    key = "train_indices" if args.on == "train" else "test_indices"
    indices = [int(i) for i in manifest[key]]
    if not indices:
        raise corpus.CorpusError(f"the {args.on} side of the split is empty")
    started = time.perf_counter()
    fitted = FittedPipeline(tfidf=tfidf, model=model)
    predictions = predict_pipeline(fitted, [loaded.documents[i] for i in indices])
    elapsed = time.perf_counter() - started

    true_labels = [loaded.labels[i] for i in indices]
    classes = sorted(set(model.classes) | set(true_labels))
    report = per_class_metrics(confusion(true_labels, predictions, classes))
    weighted_precision, weighted_recall, weighted_f1 = report.weighted_avg

    _write_json(
        out_dir / "eval_report.json",
        {
            "on": args.on,
            "report": report_to_dict(report),
            "summary": {
                "accuracy": report.accuracy,
                "precision": weighted_precision,
                "recall": weighted_recall,
                "f1": weighted_f1,
            },
            "elapsed_seconds": elapsed,
        },
    )
    text = (
        f"accuracy\t{report.accuracy:.5f}\n"
        + render_class_report(report)
        + f"summary\t{report.accuracy:.5f}\t{weighted_precision:.5f}"
        f"\t{weighted_recall:.5f}\t{weighted_f1:.5f}\n"
    )
    (out_dir / "eval_report.txt").write_text(text, "utf-8")
    print(f"accuracy on {args.on}: {report.accuracy:.5f}")
    return EXIT_OK


def cmd_crossval(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    loaded, manifest = _load_prepared(config.out_dir)
    train_indices = [int(i) for i in manifest["train_indices"]]
    report = cross_validate(
        [loaded.documents[i] for i in train_indices],
        [loaded.labels[i] for i in train_indices],
        config.pipeline_config(),
        config.k,
        substream(config.seed, "crossval"),
    )
    _write_json(
        config.out_dir / "cv_report.json",
        {
            "loss": config.loss_name,
            "params": _params_to_dict(config.params),
            "k": config.k,
            "seed": config.seed,
            **cv_to_dict(report),
        },
    )
    line = f"{config.loss_name}\t{render_cv_line(report)}"
    (config.out_dir / "cv_report.txt").write_text(line + "\n", "utf-8")
    print(line)
    return EXIT_OK


def cmd_gridsearch(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    loaded, manifest = _load_prepared(config.out_dir)
    if args.grid:
        _require_files(Path(args.grid))
        spec = load_grid_spec(args.grid)
    else:
        spec = GridSpec()
    spec.seed = substream(config.seed, "grid")
    train_indices = [int(i) for i in manifest["train_indices"]]
    started = time.perf_counter()
    candidates = grid_search(
        [loaded.documents[i] for i in train_indices],
        [loaded.labels[i] for i in train_indices],
        config.loss,
        spec,
        epochs=config.epochs,
        smote_config=config.smote_config,
        jobs=config.jobs,
    )
    elapsed = time.perf_counter() - started
    _write_json(
        config.out_dir / "grid_results.json",
        {
            "loss": config.loss_name,
            "seed": config.seed,
            "inner_folds": spec.inner_folds,
            "dev_fraction": spec.dev_fraction,
            "candidates": [candidate_to_dict(c) for c in candidates],
            "elapsed_seconds": elapsed,
        },
    )
    table = render_grid_table(candidates, config.loss_name)
    (config.out_dir / "grid_results.txt").write_text(table, "utf-8")
    winner = candidates[0]
    print(f"best: {winner.params.label()} mean={winner.mean:.5f} (+/-{winner.std:.5f})")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    loaded, manifest = _load_prepared(config.out_dir)
    if args.tuned_from:
        _require_files(Path(args.tuned_from))
        grid_data = json.loads(Path(args.tuned_from).read_text("utf-8"))
        ranked = sorted(grid_data["candidates"], key=lambda c: c["rank"])
        tuned_params = params_from_dict(ranked[0]["params"])
    else:
        tuned_params = config.params
    train_indices = [int(i) for i in manifest["train_indices"]]
    report = compare_runs(
        [loaded.documents[i] for i in train_indices],
        [loaded.labels[i] for i in train_indices],
        config.loss,
        DEFAULT_PARAMS,
        tuned_params,
        k=config.k,
        seed=substream(config.seed, "compare"),
        epochs=config.epochs,
        smote_config=config.smote_config,
    )
    _write_json(
        config.out_dir / "compare.json",
        {
            "loss": config.loss_name,
            "k": config.k,
            "seed": config.seed,
            "default_params": _params_to_dict(DEFAULT_PARAMS),
            "tuned_params": _params_to_dict(tuned_params),
            "default": cv_to_dict(report.default),
            "tuned": cv_to_dict(report.tuned),
            "mean_delta": report.mean_delta,
            "time_delta": report.time_delta,
        },
    )
    lines = [
        "Arm\tClassifier\tAccuracy",
        f"default\t{config.loss_name}\t{render_cv_line(report.default)}",
        f"tuned\t{config.loss_name}\t{render_cv_line(report.tuned)}",
        f"delta\t{config.loss_name}\t{report.mean_delta:+.5f}",
    ]
    (config.out_dir / "compare.txt").write_text("\n".join(lines) + "\n", "utf-8")
    print(lines[1])
    print(lines[2])
    return EXIT_OK


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--loss", choices=sorted(LOSSES), default="svm")
    parser.add_argument("--ngram", type=_ngram_pair, default=features.NgramRange(1, 1),
                        metavar="LO,HI", help="n-gram range (default 1,1)")
    parser.add_argument("--norm", choices=features.NORMS, default="l2")
    parser.add_argument("--use-idf", action=argparse.BooleanOptionalAction, default=True)
    parser.add_argument("--smooth-idf", action=argparse.BooleanOptionalAction, default=True)
    parser.add_argument("--penalty", choices=sgd.PENALTIES, default="l2")
    parser.add_argument("--alpha", type=_positive_float, default=1e-4)
    parser.add_argument("--epochs", type=_positive_int, default=5)
    parser.add_argument("--smote", action="store_true", help="oversample training data")
    parser.add_argument("--smote-k", type=_positive_int, default=5, metavar="K",
                        help="SMOTE neighbor count (default 5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgdtext",
        description="Train and evaluate one-vs-rest linear text classifiers with SGD.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    prepare = sub.add_parser("prepare", help="clean a CSV corpus and write a split manifest")
    prepare.add_argument("--input", required=True, help="labeled CSV file")
    prepare.add_argument("--schema", choices=sorted(corpus.SCHEMAS), default="generic")
    prepare.add_argument("--stopwords", help="stop-word file; defaults to the packaged list")
    prepare.add_argument("--no-stopwords", action="store_true", help="disable stop-word removal")
    prepare.add_argument("--split", type=_fraction, default=0.7, metavar="FRACTION")
    prepare.add_argument("--seed", type=int, default=0)
    prepare.add_argument("--out", required=True, help="output directory")
    prepare.set_defaults(func=cmd_prepare)

    train = sub.add_parser("train", help="fit the vectorizer and model on the training split")
    _add_pipeline_flags(train)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", required=True, help="directory with prepare outputs")
    train.set_defaults(func=cmd_train)

    evaluate = sub.add_parser("eval", help="score a trained model on the held-out split")
    _add_pipeline_flags(evaluate)
    evaluate.add_argument("--on", choices=("test", "train"), default="test")
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--out", required=True, help="directory with prepare+train outputs")
    evaluate.set_defaults(func=cmd_eval)

    crossval = sub.add_parser("crossval", help="stratified k-fold CV on the training split")
    _add_pipeline_flags(crossval)
    crossval.add_argument("--k", type=_positive_int, default=10)
    crossval.add_argument("--seed", type=int, default=0)
    crossval.add_argument("--out", required=True)
    crossval.set_defaults(func=cmd_crossval)

    gridsearch = sub.add_parser("gridsearch", help="exhaustive hyperparameter sweep")
    _add_pipeline_flags(gridsearch)
    gridsearch.add_argument("--grid", help="JSON grid spec; omit for the default grid")
    gridsearch.add_argument("--jobs", type=_positive_int, default=1)
    gridsearch.add_argument("--seed", type=int, default=0)
    gridsearch.add_argument("--out", required=True)
    gridsearch.set_defaults(func=cmd_gridsearch)

    compare = sub.add_parser("compare", help="default-vs-tuned CV comparison")
    _add_pipeline_flags(compare)
    compare.add_argument("--tuned-from", help="grid_results.json to take the winner from")
    compare.add_argument("--k", type=_positive_int, default=10)
    compare.add_argument("--seed", type=int, default=0)
    compare.add_argument("--out", required=True)
    compare.set_defaults(func=cmd_compare)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except sgd.NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CrossValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        cause = exc.__cause__
        return EXIT_NUMERIC if isinstance(cause, sgd.NumericError) else EXIT_DATA
    except (
        FileNotFoundError,
        corpus.CorpusError,
        json.JSONDecodeError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
