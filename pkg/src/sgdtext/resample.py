"""SMOTE: oversample minority classes with synthetic points between neighbors.

Operates on feature vectors, after vectorization. Each synthetic sample is
a + gap * (b - a) for a random class member a, one of its k nearest
same-class neighbors b (Euclidean distance), and a uniform gap in [0, 1].
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features import SparseVector
from .seeds import substream


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    # None equalizes every class to the majority count; classes at or above
    # the target are never shrunk.
    target_count: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")


@dataclass(frozen=True)
class SmoteRecord:
    """Provenance of one synthetic sample: positions refer to the input list."""

    label: int
    base_index: int
    neighbor_index: int
    gap: float


@dataclass
class SmoteResult:
    vectors: list[SparseVector]
    labels: list[int]
    records: list[SmoteRecord]


def _aligned(a: SparseVector, b: SparseVector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense values of a and b over the union of their indices."""
    idx = np.union1d(a.indices, b.indices)
    av = np.zeros(idx.size, dtype=np.float64)
    bv = np.zeros(idx.size, dtype=np.float64)
    if a.nnz:
        av[np.searchsorted(idx, a.indices)] = a.values
    if b.nnz:
        bv[np.searchsorted(idx, b.indices)] = b.values
    return idx, av, bv


def squared_distance(a: SparseVector, b: SparseVector) -> float:
    idx, av, bv = _aligned(a, b)
    diff = av - bv
    return float(diff @ diff)


def interpolate(a: SparseVector, b: SparseVector, gap: float) -> SparseVector:
    """Point on the segment from a to b: a + gap * (b - a), computed sparsely.

    The endpoints reproduce a and b exactly.
    """
    if not 0.0 <= gap <= 1.0:
        raise ValueError(f"gap must be in [0, 1], got {gap}")
    if gap == 0.0:
        return SparseVector(a.indices.copy(), a.values.copy())
    if gap == 1.0:
        return SparseVector(b.indices.copy(), b.values.copy())
    idx, av, bv = _aligned(a, b)
    values = av + gap * (bv - av)
    keep = values != 0.0
    return SparseVector(idx[keep], values[keep])


def knn_indices(points: Sequence[SparseVector], query: int, k: int) -> list[int]:
    """The k nearest points to points[query] by Euclidean distance, excluding itself.

    k is clamped to len(points) - 1; exact distance ties resolve to the
    lower index.
    """
    n = len(points)
    if n < 2:
        raise ValueError("need at least 2 points to have neighbors")
    if not 0 <= query < n:
        raise IndexError(f"query index {query} out of range for {n} points")
    k = min(k, n - 1)
    d2 = np.empty(n, dtype=np.float64)
    for i, p in enumerate(points):
        d2[i] = np.inf if i == query else squared_distance(points[query], p)
    order = np.argsort(d2, kind="stable")
    return [int(i) for i in order[:k]]


def smote(X: Sequence[SparseVector], labels: Sequence[int], config: SmoteConfig) -> SmoteResult:
    """Append synthetic minority samples until every class reaches the target count.

    Originals come first, bit-identical to the input; synthetic samples
    follow with one provenance record each. Deterministic for a fixed seed
    (per-class substreams, so class order does not couple the draws).
    """
    if len(X) != len(labels):
        raise ValueError("X and labels must have equal length")
    counts = Counter(int(lab) for lab in labels)
    if len(counts) < 2:
        raise ValueError(f"need at least 2 classes to resample, got {sorted(counts)}")
    target = config.target_count if config.target_count is not None else max(counts.values())

    out_vectors = list(X)
    out_labels = [int(lab) for lab in labels]
    records: list[SmoteRecord] = []
    for cls in sorted(counts):
        members = [i for i, lab in enumerate(labels) if int(lab) == cls]
        need = target - len(members)
        if need <= 0:
            continue
        rng = np.random.default_rng(substream(config.seed, f"smote-class-{cls}"))
        if len(members) == 1:
            warnings.warn(
                f"class {cls} has a single member; oversampling by duplication",
                stacklevel=2,
            )
            base = members[0]
            for _ in range(need):
                out_vectors.append(interpolate(X[base], X[base], 0.0))
                out_labels.append(cls)
                records.append(SmoteRecord(cls, base, base, 0.0))
            continue
        class_points = [X[i] for i in members]
        k = min(config.k_neighbors, len(members) - 1)
        neighbor_table = [knn_indices(class_points, i, k) for i in range(len(members))]
        for _ in range(need):
            a_local = int(rng.integers(len(members)))
            b_local = neighbor_table[a_local][int(rng.integers(k))]
            gap = float(rng.random())
            out_vectors.append(interpolate(class_points[a_local], class_points[b_local], gap))
            out_labels.append(cls)
            records.append(SmoteRecord(cls, members[a_local], members[b_local], gap))
    return SmoteResult(vectors=out_vectors, labels=out_labels, records=records)
