"""Distributional diagnostics between two mapped-distance samples."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .anchor import MappedDistanceSet
from .errors import ParameterError

DEFAULT_BINS = 50
DEFAULT_SMOOTHING = 0.5


def _as_sample(a) -> np.ndarray:
    if isinstance(a, MappedDistanceSet):
        return a.distances
    arr = np.asarray(a, dtype=float).ravel()
    if arr.size == 0:
        raise ParameterError("sample must be non-empty")
    return arr


def wasserstein1(a, b) -> float:
    """Exact 1-D order-1 transport distance between equal-size samples:
    the mean absolute difference of the sorted samples."""
    x = _as_sample(a)
    y = _as_sample(b)
    if x.size != y.size:
        raise ParameterError(
            f"paired samples must have equal sizes, got {x.size} and {y.size}"
        )
    return float(np.mean(np.abs(np.sort(x) - np.sort(y))))


class KlEstimate(NamedTuple):
    value: float
    degenerate: bool = False


def kl_divergence(
    a, b, bins: int = DEFAULT_BINS, smoothing: float = DEFAULT_SMOOTHING
) -> KlEstimate:
    """Binned Kullback-Leibler divergence KL(a || b).

    Both samples are histogrammed on shared equal-width bins spanning
    their pooled range; ``smoothing`` pseudo-counts per bin keep the
    reference strictly positive. If every value in both samples is
    identical the range is degenerate and the estimate is 0 with the
    ``degenerate`` flag set.
    """
    if bins < 2:
        raise ParameterError(f"bins must be >= 2, got {bins}")
    if smoothing <= 0:
        raise ParameterError(f"smoothing must be > 0, got {smoothing}")
    x = _as_sample(a)
    y = _as_sample(b)
    lo = min(x.min(), y.min())
    hi = max(x.max(), y.max())
    if lo == hi:
        return KlEstimate(value=0.0, degenerate=True)
    edges = np.linspace(lo, hi, bins + 1)
    px, _ = np.histogram(x, bins=edges)
    qy, _ = np.histogram(y, bins=edges)
    p = (px + smoothing) / (px.sum() + smoothing * bins)
    q = (qy + smoothing) / (qy.sum() + smoothing * bins)
    return KlEstimate(value=float(np.sum(p * np.log(p / q))), degenerate=False)
