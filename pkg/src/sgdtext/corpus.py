"""CSV corpus ingestion, text cleaning, and stratified train/test splitting."""

from __future__ import annotations

import csv
import math
import re
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

_TOKEN_RE = re.compile(r"[a-z]+")

# Full-field text values treated as a missing document, case-insensitive.
DEFAULT_NULL_SENTINELS = frozenset({"nan", "null", "na", "n/a", "none"})


class CorpusError(Exception):
    """Base class for corpus ingestion failures."""


class MissingColumnError(CorpusError):
    """The CSV header lacks a required column."""


class LabelValueError(CorpusError):
    """A label cell does not parse as a non-negative integer."""


@dataclass(frozen=True)
class CsvSchema:
    """Names of the label and text columns in an input CSV."""

    label_column: str = "label"
    text_column: str = "text"


SCHEMAS = {
    "generic": CsvSchema(),
    "gtd": CsvSchema(label_column="attacktype1", text_column="summary"),
}


@dataclass(frozen=True)
class RawRecord:
    """One CSV row before cleaning."""

    label_code: int
    text: str


@dataclass
class LabeledCorpus:
    """Cleaned token documents with integer class labels."""

    documents: list[list[str]]
    labels: list[int]
    label_names: dict[int, str]

    def __len__(self) -> int:
        return len(self.documents)

    def classes(self) -> list[int]:
        return sorted(set(self.labels))


@dataclass
class LoadResult:
    corpus: LabeledCorpus
    dropped: int
    total_rows: int


@dataclass(frozen=True)
class SplitPlan:
    train_indices: list[int]
    test_indices: list[int]
    seed: int
    train_fraction: float


def load_stop_words(path: str | Path | None = None) -> frozenset[str]:
    """Read a stop-word file: one word per line, '#' lines are comments.

    With no path, returns the packaged English list.
    """
    if path is None:
        text = resources.files("sgdtext").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.add(word.lower())
    return frozenset(words)


def clean_text(raw: str, stop_words: frozenset[str] | set[str]) -> list[str]:
    """Lowercase, keep maximal runs of ASCII letters, drop stop words.

    Token order follows the source text. An all-noise input yields an
    empty list; the caller decides whether to drop the record.
    """
    tokens = _TOKEN_RE.findall(raw.lower())
    if not stop_words:
        return tokens
    return [t for t in tokens if t not in stop_words]


def load_corpus(
    path: str | Path,
    schema: CsvSchema | None = None,
    stop_words: frozenset[str] | set[str] = frozenset(),
    null_sentinels: frozenset[str] = DEFAULT_NULL_SENTINELS,
) -> LoadResult:
    """Load a labeled CSV corpus, dropping rows whose text is null or cleans to nothing.

    Raises FileNotFoundError, MissingColumnError, or LabelValueError; the
    latter two carry the offending column or line number.
    """
    schema = schema or SCHEMAS["generic"]
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such corpus file: {path}")

    documents: list[list[str]] = []
    labels: list[int] = []
    dropped = 0
    total = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in (schema.label_column, schema.text_column):
            if column not in header:
                raise MissingColumnError(f"column {column!r} not found in header {header!r}")
        # Header is line 1; data starts at line 2.
        for line_number, row in enumerate(reader, start=2):
            total += 1
            raw_label = (row.get(schema.label_column) or "").strip()
            try:
                label = int(raw_label)
            except ValueError:
                raise LabelValueError(
                    f"line {line_number}: label {raw_label!r} is not an integer"
                ) from None
            if label < 0:
                raise LabelValueError(f"line {line_number}: label {label} is negative")
            text = row.get(schema.text_column) or ""
            stripped = text.strip()
            if not stripped or stripped.lower() in null_sentinels:
                dropped += 1
                continue
            tokens = clean_text(text, stop_words)
            if not tokens:
                dropped += 1
                continue
            documents.append(tokens)
            labels.append(label)

    corpus = LabeledCorpus(
        documents=documents,
        labels=labels,
        label_names={c: str(c) for c in sorted(set(labels))},
    )
    return LoadResult(corpus=corpus, dropped=dropped, total_rows=total)


def split(n: int, train_fraction: float, seed: int, labels: Sequence[int]) -> SplitPlan:
    """Stratified train/test split over indices 0..n-1.

    Each class contributes floor(train_fraction * class_count) training
    samples, then the classes with the largest fractional remainders take
    one extra until the total reaches round(train_fraction * n). Every
    class therefore stays within one sample of its exact proportion while
    the overall count lands on the rounded target. Membership within a
    class is decided by a seeded shuffle; single-member classes go to the
    training side with a warning.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if n < 2:
        raise ValueError(f"need at least 2 samples to split, got {n}")
    if len(labels) != n:
        raise ValueError(f"labels length {len(labels)} does not match n={n}")

    by_class: dict[int, list[int]] = {}
    for index, label in enumerate(labels):
        by_class.setdefault(label, []).append(index)
    classes = sorted(by_class)

    target_total = round(train_fraction * n)
    take: dict[int, int] = {}
    remainders: list[tuple[float, int]] = []
    for cls in classes:
        size = len(by_class[cls])
        if size == 1:
            warnings.warn(
                f"class {cls} has a single member; assigning it to the training set",
                stacklevel=2,
            )
            take[cls] = 1
            continue
        exact = train_fraction * size
        take[cls] = int(math.floor(exact))
        remainders.append((exact - take[cls], cls))

    leftover = target_total - sum(take.values())
    # Hand out the remaining slots to the largest remainders; ties go to
    # the lower class id so the allocation is deterministic.
    remainders.sort(key=lambda item: (-item[0], item[1]))
    for _, cls in remainders:
        if leftover <= 0:
            break
        if take[cls] < len(by_class[cls]):
            take[cls] += 1
            leftover -= 1

    rng = np.random.default_rng(seed)
    train: list[int] = []
    test: list[int] = []
    for cls in classes:
        members = np.asarray(by_class[cls], dtype=np.int64)
        shuffled = members[rng.permutation(members.size)]
        split_at = take[cls]
        train.extend(int(i) for i in shuffled[:split_at])
        test.extend(int(i) for i in shuffled[split_at:])
    train.sort()
    test.sort()
    return SplitPlan(
        train_indices=train,
        test_indices=test,
        seed=seed,
        train_fraction=train_fraction,
    )
