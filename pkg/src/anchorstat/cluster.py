"""K-means clustering of non-anchor datasets.

Lloyd iterations with k-means++ seeding, best-of-restarts selection, and
an exhaustive-search oracle for small instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .corpus import EmbeddingMatrix
from .errors import DegeneracyError, GuardError, ParameterError

BRUTE_FORCE_MAX_N = 12


@dataclass(frozen=True)
class KmeansConfig:
    restarts: int = 10
    max_iter: int = 300
    tol: float = 1e-8  # relative WCSS change

    def __post_init__(self):
        if self.restarts < 1:
            raise ParameterError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iter < 1:
            raise ParameterError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class Partition:
    """Assignment of n indices into K clusters; every id in [0, K) occurs."""

    assignment: np.ndarray
    K: int
    wcss: float

    def __post_init__(self):
        arr = np.asarray(self.assignment, dtype=np.intp).copy()
        arr.setflags(write=False)
        if arr.ndim != 1:
            raise ParameterError("assignment must be a flat index vector")
        present = np.unique(arr)
        if present.size and (present[0] < 0 or present[-1] >= self.K):
            raise ParameterError(
                f"cluster ids must lie in [0, {self.K}), got range "
                f"[{present[0]}, {present[-1]}]"
            )
        if present.size != self.K:
            missing = sorted(set(range(self.K)) - set(present.tolist()))
            raise DegeneracyError(f"empty clusters in partition: {missing}")
        object.__setattr__(self, "assignment", arr)

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    def cluster_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == k)

    def to_json(self) -> str:
        return json.dumps(
            {"K": self.K, "assignment": self.assignment.tolist(), "wcss": self.wcss},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        doc = json.loads(text)
        return cls(
            assignment=np.asarray(doc["assignment"], dtype=np.intp),
            K=int(doc["K"]),
            wcss=float(doc["wcss"]),
        )


def _values(m) -> np.ndarray:
    return m.values if isinstance(m, EmbeddingMatrix) else np.asarray(m, dtype=float)


def wcss(m, part: Partition) -> float:
    """Within-cluster sum of squares of ``part`` on the data ``m``."""
    X = _values(m)
    if part.n != X.shape[0]:
        raise ParameterError(
            f"assignment length {part.n} does not match data rows {X.shape[0]}"
        )
    total = 0.0
    for k in range(part.K):
        rows = X[part.assignment == k]
        if rows.size == 0:
            raise ParameterError(f"cluster id {k} is empty in assignment")
        center = rows.mean(axis=0)
        total += float(((rows - center) ** 2).sum())
    return total


def kmeans(
    m,
    K: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-8,
    debug: bool = False,
) -> Partition:
    """Best-of-restarts Lloyd clustering with k-means++ seeding.

    Deterministic given (data, K, seed, restarts): restart r draws from
    its own stream keyed by (seed, r), so results do not depend on
    execution order. Ties in point assignment go to the lowest cluster
    id; restart ties go to the lowest restart index.
    """
    X = _values(m)
    n = X.shape[0]
    if not 2 <= K <= n:
        raise ParameterError(f"K={K} out of range [2, n={n}]")
    if restarts < 1:
        raise ParameterError(f"restarts must be >= 1, got {restarts}")
    if np.unique(X, axis=0).shape[0] < K:
        raise DegeneracyError(
            f"fewer than K={K} distinct rows; cannot form K non-empty clusters"
        )
    best: tuple[float, np.ndarray] | None = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        assignment, value = _lloyd(X, K, rng, max_iter, tol, debug)
        if best is None or value < best[0] - 1e-12:
            best = (value, assignment)
    assignment = best[1]
    # report the recomputed objective of the final assignment
    part = Partition(assignment=assignment, K=K, wcss=0.0)
    return Partition(assignment=assignment, K=K, wcss=wcss(X, part))


def _kpp_init(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for k in range(1, K):
        total = closest.sum()
        if total <= 0.0:
            # all remaining mass on chosen centers; pick any unchosen distinct row
            centers[k] = X[rng.integers(n)]
            continue
        probs = closest / total
        idx = rng.choice(n, p=probs)
        centers[k] = X[idx]
        closest = np.minimum(closest, ((X - centers[k]) ** 2).sum(axis=1))
    return centers


def _lloyd_iterations(
    X: np.ndarray,
    K: int,
    centers: np.ndarray,
    max_iter: int,
    tol: float,
    debug: bool,
) -> np.ndarray:
    n = X.shape[0]
    centers = centers.copy()
    prev = np.inf
    assignment = np.zeros(n, dtype=np.intp)
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assignment = np.argmin(d2, axis=1)  # argmin takes the lowest id on ties
        # repair empty clusters: promote the point farthest from its center
        for k in range(K):
            if not np.any(assignment == k):
                dist_own = d2[np.arange(n), assignment]
                counts = np.bincount(assignment, minlength=K)
                movable = counts[assignment] > 1
                candidates = np.where(movable, dist_own, -np.inf)
                far = int(np.argmax(candidates))
                assignment[far] = k
                centers[k] = X[far]
        for k in range(K):
            centers[k] = X[assignment == k].mean(axis=0)
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        current = float(d2[np.arange(n), assignment].sum())
        if debug and current > prev + 1e-9:
            raise AssertionError(f"Lloyd objective increased: {prev} -> {current}")
        if np.isfinite(prev) and prev - current <= tol * max(prev, 1e-300):
            break
        prev = current
    return assignment


def _exchange_refine(X: np.ndarray, assignment: np.ndarray, K: int) -> tuple[np.ndarray, bool]:
    """Greedy single-point moves with exact objective deltas (Hartigan
    style); escapes fixed points of the assign/update alternation."""
    n = X.shape[0]
    assignment = assignment.copy()
    moved_any = False
    for _ in range(n * K):
        counts = np.bincount(assignment, minlength=K).astype(float)
        centers = np.array([X[assignment == k].mean(axis=0) for k in range(K)])
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        own = assignment
        gain_remove = counts[own] / np.maximum(counts[own] - 1, 1) * d2[np.arange(n), own]
        cost_add = counts[None, :] / (counts[None, :] + 1) * d2
        delta = gain_remove[:, None] - cost_add
        delta[np.arange(n), own] = -np.inf
        delta[counts[own] <= 1, :] = -np.inf  # never empty a cluster
        i, b = np.unravel_index(np.argmax(delta), delta.shape)
        if delta[i, b] <= 1e-12:
            break
        assignment[i] = b
        moved_any = True
    return assignment, moved_any


def _lloyd(
    X: np.ndarray,
    K: int,
    rng: np.random.Generator,
    max_iter: int,
    tol: float,
    debug: bool,
) -> tuple[np.ndarray, float]:
    assignment = _lloyd_iterations(X, K, _kpp_init(X, K, rng), max_iter, tol, debug)
    for _ in range(8):  # alternate exchanges with fresh Lloyd passes
        assignment, moved = _exchange_refine(X, assignment, K)
        if not moved:
            break
        centers = np.array([X[assignment == k].mean(axis=0) for k in range(K)])
        assignment = _lloyd_iterations(X, K, centers, max_iter, tol, debug)
    value = 0.0
    for k in range(K):
        rows = X[assignment == k]
        value += float(((rows - rows.mean(axis=0)) ** 2).sum())
    return assignment, value


def _partitions_into_k_blocks(n: int, K: int) -> Iterator[np.ndarray]:
    """Yield every assignment of n items into exactly K non-empty blocks,
    in canonical (restricted-growth) form."""
    a = np.zeros(n, dtype=np.intp)

    def rec(i: int, used: int):
        if i == n:
            if used == K:
                yield a.copy()
            return
        # cannot reach K blocks if too few items remain
        if used + (n - i) < K:
            return
        for b in range(min(used + 1, K)):
            a[i] = b
            yield from rec(i + 1, max(used, b + 1))

    yield from rec(1, 1)  # item 0 is always in block 0


def brute_force_partition(m, K: int) -> Partition:
    """Globally WCSS-optimal partition by exhaustive enumeration.

    Guarded to n <= 12; intended as a test oracle, not a clustering
    method.
    """
    X = _values(m)
    n = X.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise GuardError(
            f"exhaustive search guarded to n <= {BRUTE_FORCE_MAX_N}, got n={n}"
        )
    if not 2 <= K <= n:
        raise ParameterError(f"K={K} out of range [2, n={n}]")
    best_val = np.inf
    best_assign: np.ndarray | None = None
    for assign in _partitions_into_k_blocks(n, K):
        total = 0.0
        for k in range(K):
            rows = X[assign == k]
            center = rows.mean(axis=0)
            total += float(((rows - center) ** 2).sum())
            if total >= best_val:
                break
        if total < best_val:
            best_val = total
            best_assign = assign
    return Partition(assignment=best_assign, K=K, wcss=best_val)
