"""Data model and file formats for paired embedding datasets.

An embedding matrix holds one row per text; the row index is the pairing
key across datasets. A paired collection groups role-tagged matrices
(one anchor, any number of non-anchors) sharing a single index set.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    CorpusFormatError,
    DegeneracyError,
    DimensionError,
    ManifestError,
    PairingError,
)

ANCHOR_ROLE = "anchor"

_BINARY_MAGIC = b"EMBMAT01"
_UNIT_NORM_TOL = 1e-6


def _as_readonly(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EmbeddingMatrix:
    """n x p real matrix of embedding coordinates, immutable once built.

    ``unit_norm`` asserts that every row has unit l2 norm (within 1e-6).
    """

    values: np.ndarray
    label: str = ""
    unit_norm: bool = False

    def __post_init__(self):
        arr = _as_readonly(self.values)
        if arr.ndim != 2:
            raise DimensionError(f"embedding matrix must be 2-D, got ndim={arr.ndim}")
        n, p = arr.shape
        if n < 2:
            raise DimensionError(f"embedding matrix needs at least 2 rows, got {n}")
        if p < 1:
            raise DimensionError(f"embedding matrix needs at least 1 column, got {p}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise CorpusFormatError(
                f"non-finite entry at row {bad[0]}, col {bad[1]} in '{self.label}'"
            )
        if self.unit_norm:
            norms = np.linalg.norm(arr, axis=1)
            off = np.abs(norms - 1.0)
            if np.any(off > _UNIT_NORM_TOL):
                i = int(np.argmax(off))
                raise CorpusFormatError(
                    f"unit_norm flagged but row {i} has norm {norms[i]:.8f}"
                )
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def with_label(self, label: str) -> "EmbeddingMatrix":
        return replace(self, label=label)


def load_matrix(path, fmt: str = "csv", label: str | None = None) -> EmbeddingMatrix:
    """Read an embedding matrix from ``path`` in the given format.

    csv: headerless, comma-separated, one row per text.
    binary: 8-byte magic + uint32-LE n + uint32-LE p, then row-major
    little-endian float64.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"matrix file not found: {path}")
    if label is None:
        label = path.stem
    if fmt == "csv":
        values = _read_csv(path)
    elif fmt == "binary":
        values = _read_binary(path)
    else:
        raise CorpusFormatError(f"unknown matrix format '{fmt}'")
    return EmbeddingMatrix(values=values, label=label)


def save_matrix(m: EmbeddingMatrix, path, fmt: str = "csv") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        # 17 significant digits round-trips float64 exactly
        np.savetxt(path, m.values, delimiter=",", fmt="%.17g")
    elif fmt == "binary":
        header = _BINARY_MAGIC + struct.pack("<II", m.n, m.p)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(m.values, dtype="<f8").tobytes())
    else:
        raise CorpusFormatError(f"unknown matrix format '{fmt}'")


def _read_csv(path: Path) -> np.ndarray:
    text = path.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CorpusFormatError(f"no rows in {path}")
    widths = {len(ln.split(",")) for ln in lines}
    if len(widths) > 1:
        counts = sorted(widths)
        raise CorpusFormatError(
            f"ragged rows in {path}: row lengths {counts[0]} and {counts[-1]} both present"
        )
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        # slow diagnostic pass to locate the offending cell
        for i, ln in enumerate(lines):
            for j, cell in enumerate(ln.split(",")):
                try:
                    float(cell)
                except ValueError:
                    raise CorpusFormatError(
                        f"non-numeric cell {cell.strip()!r} at row {i}, col {j} in {path}"
                    ) from None
        raise


def _read_binary(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < 16:
        raise CorpusFormatError(f"no rows in {path} (truncated header)")
    if raw[:8] != _BINARY_MAGIC:
        raise CorpusFormatError(f"bad magic in {path}; not a matrix file")
    n, p = struct.unpack("<II", raw[8:16])
    expected = 16 + 8 * n * p
    if len(raw) != expected:
        raise CorpusFormatError(
            f"size mismatch in {path}: header says {n}x{p} "
            f"({expected} bytes), file has {len(raw)}"
        )
    return np.frombuffer(raw, dtype="<f8", offset=16).reshape(n, p).copy()


def normalize_rows(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit l2 norm and set the ``unit_norm`` flag.

    A matrix already flagged ``unit_norm`` is returned unchanged, which
    makes the operation exactly idempotent.
    """
    if m.unit_norm:
        return m
    norms = np.linalg.norm(m.values, axis=1)
    if np.any(norms == 0.0):
        i = int(np.argmin(norms))
        raise DegeneracyError(f"row {i} of '{m.label}' is all zeros; cannot normalize")
    return EmbeddingMatrix(values=m.values / norms[:, None], label=m.label, unit_norm=True)


@dataclass(frozen=True)
class PairedCollection:
    """Role-tagged embedding matrices sharing one index set.

    Row i of every member refers to the same underlying text.
    """

    members: Mapping[str, EmbeddingMatrix]
    n: int
    temperatures: Mapping[str, float | None] = field(default_factory=dict)

    @property
    def roles(self) -> list[str]:
        return sorted(self.members)

    @property
    def anchor(self) -> EmbeddingMatrix:
        if ANCHOR_ROLE not in self.members:
            raise PairingError("collection has no anchor member")
        return self.members[ANCHOR_ROLE]

    @property
    def nonanchor_roles(self) -> list[str]:
        return sorted(r for r in self.members if r != ANCHOR_ROLE)

    def member(self, role: str) -> EmbeddingMatrix:
        return self.members[role]


def validate_pairing(
    members: Mapping[str, EmbeddingMatrix] | Sequence[tuple[str, EmbeddingMatrix]],
    temperatures: Mapping[str, float | None] | None = None,
) -> PairedCollection:
    """Check the pairing contract and assemble a PairedCollection.

    All members must have the same row count; rows are never reordered.
    """
    if not isinstance(members, Mapping):
        members = dict(members)
    if len(members) < 2:
        raise PairingError(f"pairing needs at least 2 members, got {len(members)}")
    counts = {role: m.n for role, m in members.items()}
    distinct = set(counts.values())
    if len(distinct) > 1:
        detail = ", ".join(f"{role}: n={n}" for role, n in sorted(counts.items()))
        raise PairingError(f"row counts disagree across members ({detail})")
    n = distinct.pop()
    return PairedCollection(members=dict(members), n=n, temperatures=dict(temperatures or {}))


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    role: str
    temperature: float | None = None
    fmt: str = "csv"


@dataclass(frozen=True)
class ExperimentGrid:
    k_values: tuple[int, ...] = (2, 3, 4, 5)
    alpha: float = 0.05
    permutations: int = 999
    seed: int = 0

    def __post_init__(self):
        if any(k < 2 for k in self.k_values):
            raise ManifestError(f"grid K values must be >= 2, got {self.k_values}")
        if not 0 < self.alpha < 1:
            raise ManifestError(f"alpha must be in (0,1), got {self.alpha}")
        if self.permutations < 1:
            raise ManifestError("permutations must be >= 1")


@dataclass(frozen=True)
class DatasetManifest:
    """Paths, roles and experiment grid for one paired dataset collection."""

    entries: tuple[ManifestEntry, ...]
    grid: ExperimentGrid
    label: str = ""

    def __post_init__(self):
        roles = [e.role for e in self.entries]
        anchors = roles.count(ANCHOR_ROLE)
        if anchors != 1:
            raise ManifestError(f"manifest needs exactly one anchor role, found {anchors}")
        if len(roles) - anchors < 2:
            raise ManifestError("manifest needs at least two non-anchor members")
        if len(set(roles)) != len(roles):
            raise ManifestError("manifest roles must be unique")

    def validate_paths(self, base: Path | None = None) -> None:
        for e in self.entries:
            p = _resolve(e.path, base)
            if not p.exists():
                raise ManifestError(f"manifest path does not exist: {p}")

    def load_collection(self, base: Path | None = None) -> PairedCollection:
        members = {}
        temps = {}
        for e in self.entries:
            p = _resolve(e.path, base)
            members[e.role] = load_matrix(p, fmt=e.fmt, label=e.role)
            temps[e.role] = e.temperature
        return validate_pairing(members, temperatures=temps)


def _resolve(path: str, base: Path | None) -> Path:
    p = Path(path)
    if not p.is_absolute() and base is not None:
        p = Path(base) / p
    return p


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    try:
        entries = tuple(
            ManifestEntry(
                path=d["path"],
                role=d["role"],
                temperature=d.get("temperature"),
                fmt=d.get("format", "csv"),
            )
            for d in doc["datasets"]
        )
        g = doc.get("grid", {})
        grid = ExperimentGrid(
            k_values=tuple(g.get("k_values", (2, 3, 4, 5))),
            alpha=g.get("alpha", 0.05),
            permutations=g.get("permutations", 999),
            seed=g.get("seed", 0),
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"manifest missing required field: {exc}") from exc
    return DatasetManifest(entries=entries, grid=grid, label=doc.get("label", path.stem))


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "label": manifest.label,
        "datasets": [
            {
                "path": e.path,
                "role": e.role,
                "temperature": e.temperature,
                "format": e.fmt,
            }
            for e in manifest.entries
        ],
        "grid": {
            "k_values": list(manifest.grid.k_values),
            "alpha": manifest.grid.alpha,
            "permutations": manifest.grid.permutations,
            "seed": manifest.grid.seed,
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
