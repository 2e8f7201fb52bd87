"""Confusion matrices, per-class metrics, stratified folds, and the CV runner."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .pipeline import PipelineConfig, fit_pipeline, predict_pipeline
from .seeds import substream


class CrossValidationError(RuntimeError):
    """A fold failed; carries the fold index and the underlying cause."""

    def __init__(self, fold: int, message: str) -> None:
        super().__init__(f"fold {fold}: {message}")
        self.fold = fold


@dataclass(eq=False)
class ConfusionMatrix:
    """counts[i][j] = samples of true class classes[i] predicted as classes[j]."""

    counts: np.ndarray
    classes: list[int]


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassReport:
    classes: list[int]
    per_class: dict[int, ClassMetrics]
    macro_avg: tuple[float, float, float]
    weighted_avg: tuple[float, float, float]
    accuracy: float
    total_support: int


@dataclass(frozen=True)
class FoldPlan:
    folds: list[list[int]]
    seed: int


@dataclass
class CvReport:
    fold_accuracies: list[float]
    mean: float
    std: float
    fold_seconds: list[float]
    total_seconds: float


def confusion(
    true_labels: Sequence[int], predicted_labels: Sequence[int], classes: Sequence[int]
) -> ConfusionMatrix:
    """Count (true, predicted) pairs over the given class list."""
    if len(true_labels) != len(predicted_labels):
        raise ValueError("true and predicted labels must have equal length")
    class_list = [int(c) for c in classes]
    index = {c: i for i, c in enumerate(class_list)}
    counts = np.zeros((len(class_list), len(class_list)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if int(t) not in index:
            raise ValueError(f"unknown true label {t!r}")
        if int(p) not in index:
            raise ValueError(f"unknown predicted label {p!r}")
        counts[index[int(t)], index[int(p)]] += 1
    return ConfusionMatrix(counts=counts, classes=class_list)


def _safe_div(numerator: float, denominator: float) -> float:
    # 0/0 is defined as 0 so absent classes report zero metrics.
    return numerator / denominator if denominator else 0.0


def per_class_metrics(cm: ConfusionMatrix) -> ClassReport:
    """Precision/recall/F1 per class plus macro, weighted, and accuracy rows.

    Macro averages are unweighted arithmetic means over classes; weighted
    averages scale each class by its support.
    """
    counts = cm.counts
    total = int(counts.sum())
    if total == 0:
        raise ValueError("empty confusion matrix")
    per_class: dict[int, ClassMetrics] = {}
    precisions, recalls, f1s, supports = [], [], [], []
    for i, cls in enumerate(cm.classes):
        tp = float(counts[i, i])
        support = int(counts[i, :].sum())
        predicted = float(counts[:, i].sum())
        precision = _safe_div(tp, predicted)
        recall = _safe_div(tp, float(support))
        f1 = _safe_div(2.0 * precision * recall, precision + recall)
        per_class[cls] = ClassMetrics(precision, recall, f1, support)
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
        supports.append(support)
    k = len(cm.classes)
    macro = (sum(precisions) / k, sum(recalls) / k, sum(f1s) / k)
    weighted = (
        sum(p * s for p, s in zip(precisions, supports)) / total,
        sum(r * s for r, s in zip(recalls, supports)) / total,
        sum(f * s for f, s in zip(f1s, supports)) / total,
    )
    accuracy = float(np.trace(counts)) / total
    return ClassReport(
        classes=list(cm.classes),
        per_class=per_class,
        macro_avg=macro,
        weighted_avg=weighted,
        accuracy=accuracy,
        total_support=total,
    )


def micro_averages(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Micro precision, recall, F1: pooled counts over all classes.

    On a square confusion matrix all three coincide with accuracy.
    """
    counts = cm.counts
    tp = float(np.trace(counts))
    total = float(counts.sum())
    precision = _safe_div(tp, total)
    recall = _safe_div(tp, total)
    f1 = _safe_div(2.0 * precision * recall, precision + recall)
    return precision, recall, f1


def stratified_kfold(labels: Sequence[int], k: int, seed: int) -> FoldPlan:
    """Partition indices into k folds preserving per-class proportions within one.

    Members of each class are shuffled with the seeded generator, then dealt
    round-robin. The dealing position carries over from class to class, so
    k = N degenerates to leave-one-out.
    """
    n = len(labels)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} available samples")
    by_class: dict[int, list[int]] = {}
    for index, label in enumerate(labels):
        by_class.setdefault(int(label), []).append(index)
    small = sorted(c for c, members in by_class.items() if len(members) < k)
    if small:
        warnings.warn(
            f"classes {small} have fewer than k={k} members; some folds will lack them",
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    position = 0
    for cls in sorted(by_class):
        members = np.asarray(by_class[cls], dtype=np.int64)
        for index in members[rng.permutation(members.size)]:
            folds[position % k].append(int(index))
            position += 1
    for fold in folds:
        fold.sort()
    return FoldPlan(folds=folds, seed=seed)


def cross_validate(
    documents: Sequence[Sequence[str]],
    labels: Sequence[int],
    config: PipelineConfig,
    k: int,
    seed: int,
    sample_std: bool = False,
) -> CvReport:
    """Stratified k-fold accuracy of the full pipeline.

    Every fold refits the vectorizer (and the optional resampler) on its
    k-1 training folds only, so the held-out fold never leaks into the
    vocabulary. The fold plan and each fold's training seed derive from
    the seed argument. std is the population value unless sample_std.
    """
    n = len(documents)
    if len(labels) != n:
        raise ValueError("documents and labels must have equal length")
    plan = stratified_kfold(labels, k, substream(seed, "folds"))
    all_indices = set(range(n))
    accuracies: list[float] = []
    fold_seconds: list[float] = []
    started = time.perf_counter()
    for fold_index, held_out in enumerate(plan.folds):
        fold_started = time.perf_counter()
        train_indices = sorted(all_indices.difference(held_out))
        try:
            fitted = fit_pipeline(
                [documents[i] for i in train_indices],
                [labels[i] for i in train_indices],
                replace(config, seed=substream(seed, f"fold-{fold_index}")),
            )
            predictions = predict_pipeline(fitted, [documents[i] for i in held_out])
        except Exception as exc:
            raise CrossValidationError(fold_index, str(exc)) from exc
        correct = sum(1 for i, pred in zip(held_out, predictions) if pred == labels[i])
        accuracies.append(correct / len(held_out))
        fold_seconds.append(time.perf_counter() - fold_started)
    total_seconds = time.perf_counter() - started
    mean = float(np.mean(accuracies))
    std = float(np.std(accuracies, ddof=1 if sample_std else 0))
    return CvReport(
        fold_accuracies=accuracies,
        mean=mean,
        std=std,
        fold_seconds=fold_seconds,
        total_seconds=total_seconds,
    )


def report_to_dict(report: ClassReport) -> dict:
    return {
        "classes": report.classes,
        "per_class": {
            str(cls): {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
            }
            for cls, m in report.per_class.items()
        },
        "macro_avg": {
            "precision": report.macro_avg[0],
            "recall": report.macro_avg[1],
            "f1": report.macro_avg[2],
        },
        "weighted_avg": {
            "precision": report.weighted_avg[0],
            "recall": report.weighted_avg[1],
            "f1": report.weighted_avg[2],
        },
        "accuracy": report.accuracy,
        "total_support": report.total_support,
    }


def render_class_report(report: ClassReport, names: dict[int, str] | None = None) -> str:
    """Tab-separated table: one 5-decimal row per class plus the avg / total row.

    Default row names are cat<id> built from each class id, so integer labels
    1..K render as cat1..catK.
    """
    if names is None:
        names = {cls: f"cat{cls}" for cls in report.classes}
    lines = ["\tprecision\trecall\tf1-score\tsupport"]
    for cls in report.classes:
        m = report.per_class[cls]
        lines.append(
            f"{names.get(cls, str(cls))}\t{m.precision:.5f}\t{m.recall:.5f}"
            f"\t{m.f1:.5f}\t{m.support}"
        )
    wp, wr, wf = report.weighted_avg
    lines.append(f"avg / total\t{wp:.5f}\t{wr:.5f}\t{wf:.5f}\t{report.total_support}")
    return "\n".join(lines) + "\n"


def cv_to_dict(report: CvReport) -> dict:
    # Wall-clock values sit in their own keys so determinism checks can
    # compare everything else byte for byte.
    return {
        "fold_accuracies": report.fold_accuracies,
        "mean": report.mean,
        "std": report.std,
        "fold_seconds": report.fold_seconds,
        "total_seconds": report.total_seconds,
    }


def render_cv_line(report: CvReport) -> str:
    return f"{report.mean:.5f} (+/- {report.std:.5f})"
