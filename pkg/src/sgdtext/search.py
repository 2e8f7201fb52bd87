"""Exhaustive grid search over the six pipeline hyperparameters.

Candidates are scored by stratified inner-fold cross-validation on a
development subset carved out of the provided corpus, then ranked by mean
accuracy (descending), standard deviation (ascending), and enumeration
order. A failing candidate is ranked last with an error note instead of
aborting the sweep.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import corpus
from .evaluation import CvReport, cross_validate
from .features import NgramRange
from .pipeline import PipelineConfig
from .resample import SmoteConfig
from .seeds import substream
from .sgd import LossKind


@dataclass(frozen=True)
class ParamSet:
    """One concrete combination of the six tunable values."""

    ngram_range: NgramRange
    norm: str
    use_idf: bool
    smooth_idf: bool
    penalty: str
    alpha: float

    def label(self) -> str:
        return (
            f"({self.ngram_range.lo}, {self.ngram_range.hi}),"
            f"{self.norm!r},{self.use_idf},{self.smooth_idf},"
            f"{self.penalty!r},{self.alpha!r}"
        )


DEFAULT_PARAMS = ParamSet(
    ngram_range=NgramRange(1, 1),
    norm="l2",
    use_idf=True,
    smooth_idf=True,
    penalty="l2",
    alpha=1e-4,
)


@dataclass
class GridSpec:
    ngram_ranges: list[NgramRange] = field(
        default_factory=lambda: [NgramRange(1, 1), NgramRange(1, 2)]
    )
    norms: list[str] = field(default_factory=lambda: ["l1", "l2"])
    use_idf: list[bool] = field(default_factory=lambda: [True, False])
    smooth_idf: list[bool] = field(default_factory=lambda: [True, False])
    penalties: list[str] = field(default_factory=lambda: ["l1", "l2"])
    alphas: list[float] = field(default_factory=lambda: [1e-3, 1e-4, 1e-5])
    inner_folds: int = 3
    dev_fraction: float = 0.5
    seed: int = 0


@dataclass
class Candidate:
    params: ParamSet
    mean: float
    std: float
    rank: int = 0
    error: str | None = None


@dataclass
class CompareReport:
    default: CvReport
    tuned: CvReport
    mean_delta: float
    time_delta: float


def grid_spec_from_dict(data: dict) -> GridSpec:
    """Build a GridSpec from a JSON object; absent keys keep their defaults."""
    spec = GridSpec()
    if "ngram_ranges" in data:
        spec.ngram_ranges = [NgramRange(int(lo), int(hi)) for lo, hi in data["ngram_ranges"]]
    if "norms" in data:
        spec.norms = [str(n) for n in data["norms"]]
    if "use_idf" in data:
        spec.use_idf = [bool(v) for v in data["use_idf"]]
    if "smooth_idf" in data:
        spec.smooth_idf = [bool(v) for v in data["smooth_idf"]]
    if "penalties" in data:
        spec.penalties = [str(p) for p in data["penalties"]]
    if "alphas" in data:
        spec.alphas = [float(a) for a in data["alphas"]]
    if "inner_folds" in data:
        spec.inner_folds = int(data["inner_folds"])
    if "dev_fraction" in data:
        spec.dev_fraction = float(data["dev_fraction"])
    if "seed" in data:
        spec.seed = int(data["seed"])
    return spec


def load_grid_spec(path: str | Path) -> GridSpec:
    return grid_spec_from_dict(json.loads(Path(path).read_text("utf-8")))


def enumerate_grid(spec: GridSpec) -> list[ParamSet]:
    """Cartesian product of the six axes in fixed axis order."""
    axes = (
        spec.ngram_ranges,
        spec.norms,
        spec.use_idf,
        spec.smooth_idf,
        spec.penalties,
        spec.alphas,
    )
    for name, axis in zip(
        ("ngram_ranges", "norms", "use_idf", "smooth_idf", "penalties", "alphas"), axes
    ):
        if not axis:
            raise ValueError(f"grid axis {name!r} is empty")
    return [ParamSet(*combo) for combo in itertools.product(*axes)]


def _pipeline_config(
    params: ParamSet,
    loss: LossKind,
    epochs: int,
    smote_config: SmoteConfig | None,
) -> PipelineConfig:
    return PipelineConfig(
        ngram_range=params.ngram_range,
        norm=params.norm,
        use_idf=params.use_idf,
        smooth_idf=params.smooth_idf,
        penalty=params.penalty,
        alpha=params.alpha,
        loss=loss,
        epochs=epochs,
        smote=smote_config,
    )


def _score_candidate(
    documents: Sequence[Sequence[str]],
    labels: Sequence[int],
    loss: LossKind,
    params: ParamSet,
    inner_folds: int,
    seed: int,
    epochs: int,
    smote_config: SmoteConfig | None,
) -> tuple[float, float, str | None]:
    try:
        report = cross_validate(
            documents,
            labels,
            _pipeline_config(params, loss, epochs, smote_config),
            inner_folds,
            seed,
        )
        return report.mean, report.std, None
    except Exception as exc:  # ranked last, sweep continues
        return float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"


_WORKER_STATE: dict = {}


def _worker_init(documents, labels, loss, inner_folds, seed, epochs, smote_config) -> None:
    _WORKER_STATE["args"] = (documents, labels, loss, inner_folds, seed, epochs, smote_config)


def _worker_score(item: tuple[int, ParamSet]) -> tuple[int, float, float, str | None]:
    index, params = item
    documents, labels, loss, inner_folds, seed, epochs, smote_config = _WORKER_STATE["args"]
    mean, std, error = _score_candidate(
        documents, labels, loss, params, inner_folds, seed, epochs, smote_config
    )
    return index, mean, std, error


def grid_search(
    documents: Sequence[Sequence[str]],
    labels: Sequence[int],
    loss: LossKind,
    spec: GridSpec,
    *,
    epochs: int = 5,
    smote_config: SmoteConfig | None = None,
    jobs: int = 1,
) -> list[Candidate]:
    """Score every grid candidate on a stratified development subset.

    Every candidate sees the identical development set, fold plan, and
    training seeds, so the ranking is a pure function of the grid seed and
    is identical for any worker count.
    """
    combos = enumerate_grid(spec)
    plan = corpus.split(len(documents), spec.dev_fraction, substream(spec.seed, "dev"), labels)
    dev_documents = [documents[i] for i in plan.train_indices]
    dev_labels = [labels[i] for i in plan.train_indices]
    inner_seed = substream(spec.seed, "inner-cv")

    scored: list[tuple[int, float, float, str | None]] = []
    if jobs <= 1:
        for index, params in enumerate(combos):
            mean, std, error = _score_candidate(
                dev_documents,
                dev_labels,
                loss,
                params,
                spec.inner_folds,
                inner_seed,
                epochs,
                smote_config,
            )
            scored.append((index, mean, std, error))
    else:
        init_args = (
            dev_documents,
            dev_labels,
            loss,
            spec.inner_folds,
            inner_seed,
            epochs,
            smote_config,
        )
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_worker_init, initargs=init_args
        ) as pool:
            scored = list(pool.map(_worker_score, enumerate(combos), chunksize=4))

    # nan means the candidate errored; force those after every scored one.
    def sort_key(row: tuple[int, float, float, str | None]):
        index, mean, std, error = row
        if error is not None:
            return (1, 0.0, 0.0, index)
        return (0, -mean, std, index)

    scored.sort(key=sort_key)
    candidates = []
    for rank, (index, mean, std, error) in enumerate(scored, start=1):
        candidates.append(
            Candidate(params=combos[index], mean=mean, std=std, rank=rank, error=error)
        )
    return candidates


def compare_runs(
    documents: Sequence[Sequence[str]],
    labels: Sequence[int],
    loss: LossKind,
    default_params: ParamSet,
    tuned_params: ParamSet,
    k: int = 10,
    seed: int = 0,
    *,
    epochs: int = 5,
    smote_config: SmoteConfig | None = None,
) -> CompareReport:
    """Cross-validate two parameter sets on identical fold plans and diff them."""
    default_report = cross_validate(
        documents, labels, _pipeline_config(default_params, loss, epochs, smote_config), k, seed
    )
    tuned_report = cross_validate(
        documents, labels, _pipeline_config(tuned_params, loss, epochs, smote_config), k, seed
    )
    return CompareReport(
        default=default_report,
        tuned=tuned_report,
        mean_delta=tuned_report.mean - default_report.mean,
        time_delta=tuned_report.total_seconds - default_report.total_seconds,
    )


def candidate_to_dict(candidate: Candidate) -> dict:
    return {
        "rank": candidate.rank,
        "mean": candidate.mean,
        "std": candidate.std,
        "error": candidate.error,
        "params": {
            "ngram_range": [candidate.params.ngram_range.lo, candidate.params.ngram_range.hi],
            "norm": candidate.params.norm,
            "use_idf": candidate.params.use_idf,
            "smooth_idf": candidate.params.smooth_idf,
            "penalty": candidate.params.penalty,
            "alpha": candidate.params.alpha,
        },
    }


def params_from_dict(data: dict) -> ParamSet:
    lo, hi = data["ngram_range"]
    return ParamSet(
        ngram_range=NgramRange(int(lo), int(hi)),
        norm=str(data["norm"]),
        use_idf=bool(data["use_idf"]),
        smooth_idf=bool(data["smooth_idf"]),
        penalty=str(data["penalty"]),
        alpha=float(data["alpha"]),
    )


def render_grid_table(candidates: Sequence[Candidate], loss_name: str) -> str:
    """Ranked tab-separated table: classifier, mean, (+/- std), parameter tuple."""
    lines = ["Classifier\tmean\t(+/-)\tParameters"]
    for candidate in candidates:
        if candidate.error is not None:
            lines.append(f"{loss_name}\tfailed\t\t{candidate.params.label()}\t{candidate.error}")
            continue
        lines.append(
            f"{loss_name}\t{candidate.mean:.5f}\t(+/-{candidate.std:.5f})"
            f"\t{candidate.params.label()}"
        )
    return "\n".join(lines) + "\n"
