"""End-to-end glue: vectorize, optionally resample, train, predict.

One PipelineConfig carries the six tunable hyperparameters (n-gram range,
norm, use_idf, smooth_idf, penalty, alpha) plus loss, epochs, optional
SMOTE, and the seed every random choice derives from.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from . import features, sgd
from .features import NgramRange, TfidfConfig, TfidfModel
from .resample import SmoteConfig, smote
from .seeds import substream
from .sgd import LinearModel, LossKind, TrainConfig


@dataclass(frozen=True)
class PipelineConfig:
    ngram_range: NgramRange = NgramRange(1, 1)
    norm: str = "l2"
    use_idf: bool = True
    smooth_idf: bool = True
    penalty: str = "l2"
    alpha: float = 1e-4
    loss: LossKind = LossKind.HINGE
    epochs: int = 5
    smote: SmoteConfig | None = None
    seed: int = 0


@dataclass
class FittedPipeline:
    tfidf: TfidfModel
    model: LinearModel


def fit_pipeline(
    documents: Sequence[Sequence[str]],
    labels: Sequence[int],
    config: PipelineConfig,
) -> FittedPipeline:
    """Fit the vectorizer and the classifier on training documents only.

    SMOTE, when configured, runs in feature space on the training vectors
    before the classifier sees them. All randomness (resampling draws,
    shuffle order) derives from config.seed; the seed field of an attached
    SmoteConfig is replaced by a substream of it.
    """
    if len(documents) != len(labels):
        raise ValueError("documents and labels must have equal length")
    tfidf = features.fit(
        documents,
        TfidfConfig(
            ngram_range=config.ngram_range,
            use_idf=config.use_idf,
            smooth_idf=config.smooth_idf,
            norm=config.norm,
        ),
    )
    vectors = [features.transform(tfidf, doc) for doc in documents]
    train_labels = [int(lab) for lab in labels]
    if config.smote is not None:
        resampled = smote(
            vectors,
            train_labels,
            replace(config.smote, seed=substream(config.seed, "smote")),
        )
        vectors = resampled.vectors
        train_labels = resampled.labels
    model = sgd.fit_multiclass(
        vectors,
        train_labels,
        TrainConfig(
            loss=config.loss,
            penalty=config.penalty,
            alpha=config.alpha,
            epochs=config.epochs,
            seed=substream(config.seed, "shuffle"),
        ),
        feature_dim=len(tfidf.vocabulary),
    )
    return FittedPipeline(tfidf=tfidf, model=model)


def predict_pipeline(fitted: FittedPipeline, documents: Sequence[Sequence[str]]) -> list[int]:
    return [
        sgd.predict(fitted.model, features.transform(fitted.tfidf, doc)) for doc in documents
    ]
