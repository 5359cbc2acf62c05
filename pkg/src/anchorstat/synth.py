"""Synthetic paired-dataset generators and the size/power harness.

Each scenario draws one latent label vector and builds an anchor plus two
non-anchor datasets as Gaussian mixtures around dataset-specific random
community means, so the three datasets share a partition of the index
set while living in unrelated coordinate frames. The "shared" structure
keeps one label vector for everything (the null geometry); the
"independent" structure redraws labels for the second non-anchor (the
alternative geometry).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .cluster import KmeansConfig
from .corpus import EmbeddingMatrix, PairedCollection, validate_pairing
from .errors import GuardError, ParameterError, VacuousTestError
from .stattests import DEFAULT_ALPHA, DEFAULT_PERMUTATIONS, anchored_test

# Community means are placed at pairwise distance
# _BOUNDARY_CONTRAST * community_separation * noise_sd. The factor keeps a
# small boundary-overlap fraction at the default separation of 8, so the
# estimated partitions of two same-structure datasets agree on the bulk of
# points without being bitwise identical; cranking separation up drives
# the overlap to zero.
_BOUNDARY_CONTRAST = 0.6

_REDRAW_ATTEMPTS = 100


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry of one synthetic triple."""

    n: int = 300
    dim: int = 2
    K_true: int = 2
    community_separation: float = 8.0
    noise_sd: float = 1.0
    structure: str = "shared"
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 * self.K_true:
            raise ParameterError(
                f"need n >= 2*K_true, got n={self.n}, K_true={self.K_true}"
            )
        if self.K_true < 1:
            raise ParameterError(f"K_true must be >= 1, got {self.K_true}")
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if not math.isfinite(self.community_separation) or self.community_separation < 0:
            raise ParameterError("community_separation must be finite and >= 0")
        if self.noise_sd <= 0:
            raise ParameterError(f"noise_sd must be > 0, got {self.noise_sd}")
        if self.structure not in ("shared", "independent"):
            raise ParameterError(f"unknown structure '{self.structure}'")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dim": self.dim,
            "K_true": self.K_true,
            "community_separation": self.community_separation,
            "noise_sd": self.noise_sd,
            "structure": self.structure,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls(**json.loads(text))


def _place_community_means(
    K: int, dim: int, separation: float, noise_sd: float, rng: np.random.Generator
) -> np.ndarray:
    """Randomly oriented community means with min pairwise distance
    _BOUNDARY_CONTRAST * separation * noise_sd."""
    if K == 1 or separation == 0.0:
        return np.zeros((K, dim))
    target = _BOUNDARY_CONTRAST * separation * noise_sd
    for _ in range(_REDRAW_ATTEMPTS):
        raw = rng.normal(size=(K, dim))
        gaps = [
            np.linalg.norm(raw[a] - raw[b]) for a in range(K) for b in range(a + 1, K)
        ]
        dmin = min(gaps)
        if dmin > 0:
            return raw * (target / dmin)
    raise GuardError("could not draw distinct community means")


def _mixture(
    z: np.ndarray, cfg: ScenarioConfig, rng: np.random.Generator, label: str
) -> EmbeddingMatrix:
    means = _place_community_means(cfg.K_true, cfg.dim, cfg.community_separation, cfg.noise_sd, rng)
    values = means[z] + cfg.noise_sd * rng.normal(size=(cfg.n, cfg.dim))
    return EmbeddingMatrix(values=values, label=label)


def _canonical_labels(z: np.ndarray) -> tuple:
    """Relabel so cluster ids appear in first-occurrence order; two label
    vectors describe the same set partition iff their canonical forms match."""
    mapping: dict[int, int] = {}
    out = []
    for v in z.tolist():
        if v not in mapping:
            mapping[v] = len(mapping)
        out.append(mapping[v])
    return tuple(out)


def generate_null_triple(cfg: ScenarioConfig) -> PairedCollection:
    """Anchor and two non-anchors built on one shared label vector."""
    if cfg.structure != "shared":
        raise ParameterError("null scenario requires structure='shared'")
    rng = np.random.default_rng(cfg.seed)
    z = rng.integers(0, cfg.K_true, cfg.n)
    members = {
        "anchor": _mixture(z, cfg, rng, "anchor"),
        "nonanchor_1": _mixture(z, cfg, rng, "nonanchor_1"),
        "nonanchor_2": _mixture(z, cfg, rng, "nonanchor_2"),
    }
    return validate_pairing(members)


def generate_alt_triple(cfg: ScenarioConfig) -> PairedCollection:
    """As the null triple, but the second non-anchor gets independently
    redrawn labels, so the two non-anchor partitions disagree."""
    if cfg.structure != "independent":
        raise ParameterError("alternative scenario requires structure='independent'")
    rng = np.random.default_rng(cfg.seed)
    z = rng.integers(0, cfg.K_true, cfg.n)
    z2 = None
    for _ in range(_REDRAW_ATTEMPTS):
        cand = rng.integers(0, cfg.K_true, cfg.n)
        if _canonical_labels(cand) != _canonical_labels(z):
            z2 = cand
            break
    if z2 is None:
        raise GuardError(
            "independent label redraw kept colliding with the shared labels"
        )
    members = {
        "anchor": _mixture(z, cfg, rng, "anchor"),
        "nonanchor_1": _mixture(z, cfg, rng, "nonanchor_1"),
        "nonanchor_2": _mixture(z2, cfg, rng, "nonanchor_2"),
    }
    return validate_pairing(members)


def generate_battery_quad(cfg: ScenarioConfig) -> PairedCollection:
    """Four-member collection for battery pattern studies.

    The anchor and two "aligned" non-anchors share one label vector; the
    "drifted" non-anchor gets independent labels. Every member has its
    own random community means, so direct paired comparisons between any
    two members differ even when their label structure matches.
    """
    rng = np.random.default_rng(cfg.seed)
    z = rng.integers(0, cfg.K_true, cfg.n)
    z_drift = rng.integers(0, cfg.K_true, cfg.n)
    members = {
        "anchor": _mixture(z, cfg, rng, "anchor"),
        "nonanchor_aligned_1": _mixture(z, cfg, rng, "nonanchor_aligned_1"),
        "nonanchor_aligned_2": _mixture(z, cfg, rng, "nonanchor_aligned_2"),
        "nonanchor_drifted": _mixture(z_drift, cfg, rng, "nonanchor_drifted"),
    }
    return validate_pairing(members)


def generate_drift_family(
    cfg: ScenarioConfig, rho_fractions: Sequence[tuple[float, float]]
) -> PairedCollection:
    """Anchor, one baseline non-anchor, and one non-anchor per (rho,
    fraction) pair whose labels are the shared vector with ``fraction``
    of entries resampled. Larger fractions drift the community structure
    further from the baseline.
    """
    rng = np.random.default_rng(cfg.seed)
    z = rng.integers(0, cfg.K_true, cfg.n)
    members = {
        "anchor": _mixture(z, cfg, rng, "anchor"),
        "nonanchor_base": _mixture(z, cfg, rng, "nonanchor_base"),
    }
    temperatures: dict[str, float | None] = {"anchor": None, "nonanchor_base": None}
    for rho, fraction in rho_fractions:
        if not 0.0 <= fraction <= 1.0:
            raise ParameterError(f"drift fraction must be in [0,1], got {fraction}")
        z_rho = z.copy()
        moved = rng.random(cfg.n) < fraction
        z_rho[moved] = rng.integers(0, cfg.K_true, int(moved.sum()))
        role = f"nonanchor_rho_{rho:g}"
        members[role] = _mixture(z_rho, cfg, rng, role)
        temperatures[role] = float(rho)
    return validate_pairing(members, temperatures=temperatures)


def rand_index(a: np.ndarray, b: np.ndarray) -> float:
    """Fraction of index pairs on which two partitions agree (both
    together or both apart)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ParameterError("partitions must cover the same indices")
    same_a = a[:, None] == a[None, :]
    same_b = b[:, None] == b[None, :]
    iu = np.triu_indices(a.shape[0], k=1)
    return float(np.mean(same_a[iu] == same_b[iu]))


@dataclass(frozen=True)
class MonteCarloReport:
    """Rejection-rate summary over M independently seeded replicates."""

    scenario: str
    M: int
    rejections: int
    vacuous: int
    rate: float
    ci_low: float
    ci_high: float
    degenerate_ci: bool
    mean_runtime_s: float
    alpha: float
    K: int
    replicates: int
    seed: int

    def to_dict(self, volatile: bool = True) -> dict:
        """``volatile=False`` drops the wall-clock field so the document
        is byte-reproducible across reruns."""
        doc = {
            "scenario": self.scenario,
            "M": self.M,
            "rejections": self.rejections,
            "vacuous": self.vacuous,
            "rate": self.rate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "degenerate_ci": self.degenerate_ci,
            "alpha": self.alpha,
            "K": self.K,
            "replicates": self.replicates,
            "seed": self.seed,
        }
        if volatile:
            doc["mean_runtime_s"] = self.mean_runtime_s
        return doc

    def to_json(self, volatile: bool = True) -> str:
        return json.dumps(self.to_dict(volatile=volatile), indent=2, sort_keys=True)


def _wilson_ci(successes: int, total: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if total == 0:
        return (0.0, 1.0)
    phat = successes / total
    denom = 1 + z**2 / total
    center = (phat + z**2 / (2 * total)) / denom
    half = z * math.sqrt(phat * (1 - phat) / total + z**2 / (4 * total**2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _replicate_seed(seed: int, m: int) -> int:
    return int(np.random.SeedSequence([seed, m]).generate_state(1)[0])


def monte_carlo(
    scenario: str,
    cfg: ScenarioConfig,
    M: int,
    K: int | None = None,
    R: int = DEFAULT_PERMUTATIONS,
    alpha: float = DEFAULT_ALPHA,
    kmeans_config: KmeansConfig = KmeansConfig(),
) -> MonteCarloReport:
    """Run the anchored test on M independently seeded triples.

    A replicate whose mapped structures come out identical contributes a
    non-rejection (identical mappings are the strongest agreement with
    the null); such replicates are tallied in ``vacuous``.
    """
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    if scenario == "null":
        generate = generate_null_triple
        cfg = replace(cfg, structure="shared")
    elif scenario == "alt":
        generate = generate_alt_triple
        cfg = replace(cfg, structure="independent")
    else:
        raise ParameterError(f"unknown scenario '{scenario}'")
    K_test = K if K is not None else cfg.K_true
    rejections = 0
    vacuous = 0
    start = time.perf_counter()
    for m in range(M):
        rep_cfg = replace(cfg, seed=_replicate_seed(cfg.seed, m))
        triple = generate(rep_cfg)
        try:
            report = anchored_test(
                triple.member("anchor"),
                triple.member("nonanchor_1"),
                triple.member("nonanchor_2"),
                K=K_test,
                kmeans_config=kmeans_config,
                R=R,
                seed=_replicate_seed(cfg.seed, M + m),
                alpha=alpha,
            )
        except VacuousTestError:
            vacuous += 1
            continue
        if report.reject:
            rejections += 1
    elapsed = time.perf_counter() - start
    rate = rejections / M
    ci_low, ci_high = _wilson_ci(rejections, M)
    return MonteCarloReport(
        scenario=scenario,
        M=M,
        rejections=rejections,
        vacuous=vacuous,
        rate=rate,
        ci_low=ci_low,
        ci_high=ci_high,
        degenerate_ci=(M * rate * (1 - rate) == 0),
        mean_runtime_s=elapsed / M,
        alpha=alpha,
        K=K_test,
        replicates=R,
        seed=cfg.seed,
    )
