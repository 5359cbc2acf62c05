"""PCA reduction of embedding matrices to a working dimension.

The reduction is a plain covariance eigendecomposition with a fixed sign
convention so that two fits on identical data agree bitwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import EmbeddingMatrix, PairedCollection, validate_pairing
from .errors import DimensionError, ParameterError

_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class PcaModel:
    """Fitted projection: ``mean`` (ambient), ``components`` (p x ambient,
    orthonormal rows), ``explained_variance`` (non-increasing)."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        comps = np.asarray(self.components, dtype=float)
        ev = np.asarray(self.explained_variance, dtype=float)
        if comps.ndim != 2 or mean.ndim != 1 or comps.shape[1] != mean.shape[0]:
            raise DimensionError("components must be p x ambient with matching mean")
        gram = comps @ comps.T
        if not np.allclose(gram, np.eye(comps.shape[0]), atol=_ORTHO_TOL):
            raise DimensionError("component rows are not orthonormal")
        if np.any(np.diff(ev) > 1e-12):
            raise DimensionError("explained_variance must be non-increasing")
        if np.any(ev < -1e-10):
            raise DimensionError("explained_variance must be nonnegative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "explained_variance", np.maximum(ev, 0.0))

    @property
    def p(self) -> int:
        return self.components.shape[0]

    @property
    def p_ambient(self) -> int:
        return self.components.shape[1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "mean": self.mean.tolist(),
                "components": self.components.tolist(),
                "explained_variance": self.explained_variance.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "PcaModel":
        doc = json.loads(text)
        return cls(
            mean=np.asarray(doc["mean"], dtype=float),
            components=np.asarray(doc["components"], dtype=float),
            explained_variance=np.asarray(doc["explained_variance"], dtype=float),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "PcaModel":
        return cls.from_json(Path(path).read_text())


def fit_pca(m: EmbeddingMatrix, p: int) -> PcaModel:
    """Fit a p-dimensional PCA model on ``m``.

    Requires 1 <= p <= min(n-1, ambient). Component signs are fixed by
    making the largest-magnitude coordinate of each component positive,
    so the fit is deterministic.
    """
    n, ambient = m.n, m.p
    if not 1 <= p <= min(n - 1, ambient):
        raise DimensionError(
            f"target dimension p={p} out of range [1, min(n-1={n - 1}, ambient={ambient})]"
        )
    mean = m.values.mean(axis=0)
    centered = m.values - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    # eigh returns ascending; stable sort keeps tied eigenvalues in input order
    order = np.argsort(-eigvals, kind="stable")[:p]
    components = eigvecs[:, order].T.copy()
    explained = np.maximum(eigvals[order], 0.0)
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, explained_variance=explained)


def apply_pca(model: PcaModel, m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Project ``m`` onto the model's components (centered coordinates)."""
    if m.p != model.p_ambient:
        raise DimensionError(
            f"matrix has {m.p} columns but model expects {model.p_ambient}"
        )
    projected = (m.values - model.mean) @ model.components.T
    return EmbeddingMatrix(values=projected, label=m.label)


def reconstruct(model: PcaModel, reduced: np.ndarray) -> np.ndarray:
    """Map reduced coordinates back to ambient space."""
    return np.asarray(reduced, dtype=float) @ model.components + model.mean


def fit_collection_models(
    c: PairedCollection, p: int, mode: str = "per_dataset"
) -> dict[str, PcaModel]:
    """Fit the reduction model(s) for a collection without applying them."""
    if mode == "per_dataset":
        return {role: fit_pca(c.members[role], p) for role in c.roles}
    if mode == "joint":
        dims = {c.members[role].p for role in c.roles}
        if len(dims) > 1:
            raise DimensionError(
                f"joint reduction needs equal ambient dims, got {sorted(dims)}"
            )
        stacked = np.vstack([c.members[role].values for role in c.roles])
        joint_model = fit_pca(EmbeddingMatrix(values=stacked, label="joint"), p)
        return {role: joint_model for role in c.roles}
    raise ParameterError(f"unknown reduction mode '{mode}'")


def reduce_collection(
    c: PairedCollection, p: int, mode: str = "per_dataset"
) -> PairedCollection:
    """Reduce every member of ``c`` to p dimensions.

    per_dataset: each member is fitted and projected independently (the
    members may end up in unrelated spaces).
    joint: one model is fitted on the row-concatenation of all members
    and applied to each, giving a single common space.
    """
    models = fit_collection_models(c, p, mode)
    reduced = {role: apply_pca(models[role], c.members[role]) for role in c.roles}
    return validate_pairing(reduced, temperatures=c.temperatures)
