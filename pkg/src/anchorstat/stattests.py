"""Skewness-adjusted paired location test under sign-flip permutation,
plus the reference battery of paired and unpaired two-sample tests.

The primary statistic is the modified paired t of Johnson (1978): the
classical paired t plus a third-central-moment correction,

    T = dbar/se + mu3 * ((dbar/var)^2 / 3 + 1/(6*var*n)) / se

with se = sqrt(var/n), var the (n-1)-denominator sample variance and
mu3 = sum((d - dbar)^3) / (n-1). Its null distribution is estimated by
flipping the sign of each paired difference independently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import stats as scipy_stats
from scipy.spatial.distance import cdist

from .anchor import DiffVector, mapped_distances, paired_differences
from .cluster import KmeansConfig, kmeans
from .corpus import EmbeddingMatrix, validate_pairing
from .errors import (
    DegeneracyError,
    DegenerateSampleError,
    DimensionError,
    ParameterError,
    VacuousTestError,
)

DEFAULT_PERMUTATIONS = 999
DEFAULT_ALPHA = 0.05

METHOD_TAGS = ("anchored_johnson", "hotelling_paired", "nploc_mean", "energy")


@dataclass(frozen=True)
class TestReport:
    """Outcome of one hypothesis test at level alpha."""

    method: str
    statistic: float
    p_value: float
    replicates: int
    seed: int
    alpha: float
    reject: bool
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHOD_TAGS:
            raise ParameterError(f"unknown method tag '{self.method}'")
        if not 0.0 < self.p_value <= 1.0:
            raise ParameterError(f"p-value out of (0, 1]: {self.p_value}")
        if self.reject != (self.p_value < self.alpha):
            raise ParameterError("reject flag inconsistent with p-value and alpha")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "replicates": self.replicates,
            "seed": self.seed,
            "alpha": self.alpha,
            "reject": self.reject,
            "metadata": dict(self.metadata),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _as_diff_array(d) -> np.ndarray:
    if isinstance(d, DiffVector):
        return d.diffs
    return np.asarray(d, dtype=float)


def _johnson_t_rows(X: np.ndarray) -> np.ndarray:
    """Modified paired t of each row of X; rows with zero variance map to
    +/-inf (the location signal is infinitely strong relative to spread)."""
    n = X.shape[1]
    mean = X.mean(axis=1)
    dev = X - mean[:, None]
    var = (dev**2).sum(axis=1) / (n - 1)
    mu3 = (dev**3).sum(axis=1) / (n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.sqrt(var / n)
        t = mean / se + mu3 * ((mean / var) ** 2 / 3.0 + 1.0 / (6.0 * var * n)) / se
        t = np.where(var > 0.0, t, np.sign(mean) * np.inf)
    return t


def johnson_t(d) -> float:
    """Modified paired t-statistic of a difference sample."""
    arr = _as_diff_array(d)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise ParameterError(f"need a flat sample with n >= 2, got shape {arr.shape}")
    if np.ptp(arr) == 0.0:
        raise DegenerateSampleError(
            "sample variance is zero; the modified t-statistic is undefined"
        )
    return float(_johnson_t_rows(arr[None, :])[0])


def _sign_matrix(n: int, R: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=(R, n)) * 2 - 1


def sign_flip_pvalue(
    d,
    R: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    metadata: Mapping[str, object] | None = None,
) -> TestReport:
    """Two-sided sign-flip permutation test of zero mean difference.

    Each replicate multiplies every difference by an independent uniform
    +/-1 draw and recomputes the modified t. The add-one estimate
    p = (1 + #{|T_r| >= |T_obs|}) / (R + 1) is returned; the raw
    proportion of replicates strictly below |T_obs| is recorded in the
    report metadata as ``strict_exceedance_proportion``.

    The replicate draws depend only on (seed, R, n), so the p-value is
    reproducible and independent of execution order or thread count.
    """
    if R < 1:
        raise ParameterError(f"permutation count must be >= 1, got {R}")
    arr = _as_diff_array(d)
    t_obs = johnson_t(arr)
    signs = _sign_matrix(arr.shape[0], R, seed)
    t_rep = _johnson_t_rows(signs * arr[None, :])
    exceed = int(np.sum(np.abs(t_rep) >= abs(t_obs)))
    p = (1 + exceed) / (R + 1)
    meta = dict(metadata or {})
    meta["strict_exceedance_proportion"] = float(np.mean(abs(t_obs) > np.abs(t_rep)))
    return TestReport(
        method="anchored_johnson",
        statistic=t_obs,
        p_value=p,
        replicates=R,
        seed=seed,
        alpha=alpha,
        reject=p < alpha,
        metadata=meta,
    )


def _child_seed(seed: int, *path: int) -> int:
    ss = np.random.SeedSequence([int(seed), *[int(x) for x in path]])
    return int(ss.generate_state(1)[0])


def anchored_test(
    anchor: EmbeddingMatrix,
    d1: EmbeddingMatrix,
    d2: EmbeddingMatrix,
    K: int,
    kmeans_config: KmeansConfig = KmeansConfig(),
    R: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
) -> TestReport:
    """Test whether two non-anchor datasets share one community structure.

    Clusters each non-anchor at K, maps both partitions onto the anchor,
    and applies the sign-flip modified-t test to the paired distance
    differences. Identical mapped structures leave nothing to test and
    raise VacuousTestError.
    """
    validate_pairing({"anchor": anchor, "d1": d1, "d2": d2})
    part1 = kmeans(
        d1,
        K,
        seed=_child_seed(seed, 1),
        restarts=kmeans_config.restarts,
        max_iter=kmeans_config.max_iter,
        tol=kmeans_config.tol,
    )
    part2 = kmeans(
        d2,
        K,
        seed=_child_seed(seed, 2),
        restarts=kmeans_config.restarts,
        max_iter=kmeans_config.max_iter,
        tol=kmeans_config.tol,
    )
    set1 = mapped_distances(anchor, part1, source=d1.label)
    set2 = mapped_distances(anchor, part2, source=d2.label)
    diff = paired_differences(set1, set2)
    if np.all(diff.diffs == 0.0):
        raise VacuousTestError(
            "mapped community structures are identical; the paired test is vacuous"
        )
    meta = {
        "K": K,
        "anchor_label": anchor.label,
        "d1_label": d1.label,
        "d2_label": d2.label,
        "kmeans_restarts": kmeans_config.restarts,
    }
    return sign_flip_pvalue(
        diff, R=R, seed=_child_seed(seed, 3), alpha=alpha, metadata=meta
    )


def _sample_rows(x) -> np.ndarray:
    """Coerce a sample to an (n, p) array; a flat vector is n 1-D points."""
    if isinstance(x, EmbeddingMatrix):
        return x.values
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"sample must be 1-D or 2-D, got ndim={arr.ndim}")
    return arr


def _paired_diff_rows(x, y) -> np.ndarray:
    X = _sample_rows(x)
    Y = _sample_rows(y)
    if X.shape != Y.shape:
        raise DimensionError(f"paired matrices must share a shape: {X.shape} vs {Y.shape}")
    return X - Y


def _t2_statistic(D: np.ndarray) -> float:
    n, p = D.shape
    dbar = D.mean(axis=0)
    S = np.atleast_2d(np.cov(D, rowvar=False, ddof=1))
    if np.linalg.matrix_rank(S) < p:
        raise DegeneracyError("difference covariance is singular")
    return float(n * dbar @ np.linalg.solve(S, dbar))


def hotelling_paired(x, y, alpha: float = DEFAULT_ALPHA, seed: int = 0) -> TestReport:
    """Paired multivariate mean test with the exact F reference distribution.

    T^2 = n * dbar' S^-1 dbar on row differences; the p-value comes from
    F = T^2 (n-p) / (p (n-1)) with (p, n-p) degrees of freedom.
    """
    D = _paired_diff_rows(x, y)
    n, p = D.shape
    if np.all(D == 0.0):
        raise VacuousTestError("paired rows are identical; the test is vacuous")
    if n <= p:
        raise DegeneracyError(f"need n > p for the F reference, got n={n}, p={p}")
    t2 = _t2_statistic(D)
    f_stat = t2 * (n - p) / (p * (n - 1))
    p_value = float(scipy_stats.f.sf(f_stat, p, n - p))
    p_value = min(max(p_value, np.nextafter(0, 1)), 1.0)
    return TestReport(
        method="hotelling_paired",
        statistic=t2,
        p_value=p_value,
        replicates=0,
        seed=seed,
        alpha=alpha,
        reject=p_value < alpha,
        metadata={"f_statistic": f_stat, "df": [p, n - p]},
    )


def nploc_mean_test(
    x,
    y,
    R: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
) -> TestReport:
    """Nonparametric paired mean-location test.

    Uses the same quadratic-form statistic as the paired T^2 but draws
    its null distribution by flipping the sign of whole difference rows,
    with the add-one p-value estimate.
    """
    if R < 1:
        raise ParameterError(f"permutation count must be >= 1, got {R}")
    D = _paired_diff_rows(x, y)
    n, p = D.shape
    if np.all(D == 0.0):
        raise VacuousTestError("paired rows are identical; the test is vacuous")
    if n <= p:
        raise DegeneracyError(f"need n > p, got n={n}, p={p}")
    obs = _t2_statistic(D)
    # flipping signs of whole rows leaves the Gram matrix D'D unchanged,
    # so each replicate only moves the mean: S_r = (D'D - n m m') / (n-1)
    gram = D.T @ D
    signs = _sign_matrix(n, R, seed)
    means = signs @ D / n
    exceed = 0
    for r in range(R):
        m = means[r]
        S = (gram - n * np.outer(m, m)) / (n - 1)
        try:
            stat = float(n * m @ np.linalg.solve(S, m))
        except np.linalg.LinAlgError:
            stat = np.inf  # flip collapsed the spread; maximally extreme
        if stat >= obs:
            exceed += 1
    p_value = (1 + exceed) / (R + 1)
    return TestReport(
        method="nploc_mean",
        statistic=obs,
        p_value=p_value,
        replicates=R,
        seed=seed,
        alpha=alpha,
        reject=p_value < alpha,
        metadata={},
    )


def energy_statistic(x, y) -> float:
    """Two-sample energy statistic with the 1/n^2 within-sample convention.

    (nx ny / (nx+ny)) * (2 mean||x-y|| - mean||x-x'|| - mean||y-y'||),
    where within-sample means run over all ordered pairs including i=j.
    """
    X = _sample_rows(x)
    Y = _sample_rows(y)
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(
            f"samples must share a dimension: {X.shape[1]} vs {Y.shape[1]}"
        )
    nx, ny = X.shape[0], Y.shape[0]
    between = cdist(X, Y).mean()
    within_x = cdist(X, X).mean()
    within_y = cdist(Y, Y).mean()
    return float(nx * ny / (nx + ny) * (2.0 * between - within_x - within_y))


def energy_test(
    x,
    y,
    R: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
) -> TestReport:
    """Unpaired equal-distribution test via the energy statistic with a
    pooled-relabel permutation null and add-one p-value."""
    if R < 1:
        raise ParameterError(f"permutation count must be >= 1, got {R}")
    X = _sample_rows(x)
    Y = _sample_rows(y)
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(
            f"samples must share a dimension: {X.shape[1]} vs {Y.shape[1]}"
        )
    nx, ny = X.shape[0], Y.shape[0]
    pooled = np.vstack([X, Y])
    dmat = cdist(pooled, pooled)
    coef = nx * ny / (nx + ny)

    def stat_from(ix: np.ndarray, iy: np.ndarray) -> float:
        between = dmat[np.ix_(ix, iy)].mean()
        within_x = dmat[np.ix_(ix, ix)].mean()
        within_y = dmat[np.ix_(iy, iy)].mean()
        return float(coef * (2.0 * between - within_x - within_y))

    idx = np.arange(nx + ny)
    obs = stat_from(idx[:nx], idx[nx:])
    rng = np.random.default_rng(seed)
    exceed = 0
    for _ in range(R):
        perm = rng.permutation(idx)
        if stat_from(perm[:nx], perm[nx:]) >= obs:
            exceed += 1
    p_value = (1 + exceed) / (R + 1)
    return TestReport(
        method="energy",
        statistic=obs,
        p_value=p_value,
        replicates=R,
        seed=seed,
        alpha=alpha,
        reject=p_value < alpha,
        metadata={},
    )
