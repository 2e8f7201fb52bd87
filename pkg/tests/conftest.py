"""Shared fixtures: corpus builders and random sparse-vector generation."""

from __future__ import annotations

import numpy as np
import pytest

from sgdtext import SparseVector


@pytest.fixture
def signature_corpus():
    """Factory for a separable corpus: class k owns the token sig{k}."""

    def build(n_classes: int = 3, per_class: int = 9) -> tuple[list[list[str]], list[int]]:
        documents: list[list[str]] = []
        labels: list[int] = []
        for k in range(n_classes):
            for _ in range(per_class):
                documents.append([f"sig{k}", "common"])
                labels.append(k + 1)
        return documents, labels

    return build


@pytest.fixture
def random_vector():
    """Factory for a random sparse vector with at least one nonzero entry."""

    def build(rng: np.random.Generator, dim: int = 50, max_nnz: int = 8) -> SparseVector:
        nnz = int(rng.integers(1, max_nnz + 1))
        indices = np.sort(rng.choice(dim, size=nnz, replace=False)).astype(np.int64)
        values = rng.normal(size=nnz)
        values[values == 0.0] = 1.0
        return SparseVector(indices, values)

    return build


@pytest.fixture
def labeled_csv(tmp_path):
    """Write a small generic-schema CSV and return its path.

    Thirty usable rows across three classes, plus one null-text row and
    one row that cleans to nothing, both of which prepare must drop.
    """
    rows = ["label,text"]
    fillers = ["quick brown fox", "lazy dog sleeps", "bright red apple"]
    markers = ["alfa", "bravo", "carlo"]
    for i in range(30):
        cls = i % 3
        unique = "u" + chr(ord("a") + i // 26) + chr(ord("a") + i % 26)
        rows.append(f'{cls},"{markers[cls]} {fillers[cls]} {unique}"')
    rows.append("0,NaN")
    rows.append('1,"123 456 789"')
    path = tmp_path / "corpus.csv"
    path.write_text("\n".join(rows) + "\n", "utf-8")
    return path
