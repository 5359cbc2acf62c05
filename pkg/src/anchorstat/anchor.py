"""Mapping of non-anchor cluster structures onto the anchor dataset.

A partition obtained on a non-anchor dataset induces, for every anchor
row, a center (the mean of anchor rows sharing its cluster) and a
distance to that center. Two such distance sets over the same anchor are
directly comparable because their i-th entries refer to the same text.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import EmbeddingMatrix
from .cluster import Partition
from .errors import PairingError


@dataclass(frozen=True)
class MappedDistanceSet:
    """Per-row distances in anchor space induced by one non-anchor partition."""

    distances: np.ndarray
    source: str
    anchor: str
    K: int

    def __post_init__(self):
        arr = np.asarray(self.distances, dtype=float).copy()
        arr.setflags(write=False)
        if arr.ndim != 1:
            raise PairingError("distances must be a flat vector")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise PairingError("distances must be finite and nonnegative")
        object.__setattr__(self, "distances", arr)

    @property
    def n(self) -> int:
        return self.distances.shape[0]

    def save_csv(self, path) -> None:
        np.savetxt(Path(path), self.distances, fmt="%.17g")

    @classmethod
    def load_csv(cls, path, source: str = "", anchor: str = "", K: int = 0):
        return cls(
            distances=np.loadtxt(Path(path), ndmin=1), source=source, anchor=anchor, K=K
        )


@dataclass(frozen=True)
class DiffVector:
    """Paired differences between two mapped distance sets."""

    diffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.diffs, dtype=float).copy()
        arr.setflags(write=False)
        if arr.ndim != 1:
            raise PairingError("diffs must be a flat vector")
        if not np.all(np.isfinite(arr)):
            raise PairingError("diffs must be finite")
        object.__setattr__(self, "diffs", arr)

    @property
    def n(self) -> int:
        return self.diffs.shape[0]


def mapped_centers(anchor: EmbeddingMatrix, part: Partition) -> np.ndarray:
    """K centers in anchor space: center k is the mean of anchor rows whose
    index lies in cluster k of ``part``."""
    if part.n != anchor.n:
        raise PairingError(
            f"partition covers {part.n} indices but anchor has {anchor.n} rows"
        )
    centers = np.empty((part.K, anchor.p))
    for k in range(part.K):
        centers[k] = anchor.values[part.assignment == k].mean(axis=0)
    return centers


def mapped_distances(
    anchor: EmbeddingMatrix, part: Partition, source: str = ""
) -> MappedDistanceSet:
    """Distance from each anchor row to its induced center under ``part``."""
    centers = mapped_centers(anchor, part)
    dist = np.linalg.norm(anchor.values - centers[part.assignment], axis=1)
    return MappedDistanceSet(
        distances=dist, source=source, anchor=anchor.label, K=part.K
    )


def paired_differences(a: MappedDistanceSet, b: MappedDistanceSet) -> DiffVector:
    """Elementwise difference a - b of two distance sets over one anchor."""
    if a.anchor != b.anchor:
        raise PairingError(
            f"distance sets live over different anchors: '{a.anchor}' vs '{b.anchor}'"
        )
    if a.n != b.n:
        raise PairingError(f"distance set lengths differ: {a.n} vs {b.n}")
    return DiffVector(diffs=a.distances - b.distances)
