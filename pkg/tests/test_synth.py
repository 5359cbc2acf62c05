import numpy as np
import pytest

from anchorstat.cluster import kmeans
from anchorstat.errors import GuardError, ParameterError
from anchorstat.synth import (
    ScenarioConfig,
    generate_alt_triple,
    generate_battery_quad,
    generate_drift_family,
    generate_null_triple,
    monte_carlo,
    rand_index,
)


def _cfg(**overrides):
    base = dict(n=200, dim=2, K_true=2, community_separation=8.0, noise_sd=1.0, seed=0)
    base.update(overrides)
    return ScenarioConfig(**base)


def test_config_validation():
    with pytest.raises(ParameterError):
        _cfg(n=3, K_true=2)
    with pytest.raises(ParameterError):
        _cfg(noise_sd=0.0)
    with pytest.raises(ParameterError):
        _cfg(community_separation=float("inf"))
    with pytest.raises(ParameterError):
        ScenarioConfig(structure="other")


def test_structure_guards():
    with pytest.raises(ParameterError, match="shared"):
        generate_null_triple(_cfg(structure="independent"))
    with pytest.raises(ParameterError, match="independent"):
        generate_alt_triple(_cfg(structure="shared"))


def test_same_config_bitwise_identical():
    cfg = _cfg(structure="shared", seed=42)
    t1 = generate_null_triple(cfg)
    t2 = generate_null_triple(cfg)
    for role in t1.roles:
        np.testing.assert_array_equal(t1.member(role).values, t2.member(role).values)


def test_different_seeds_differ():
    a = generate_null_triple(_cfg(structure="shared", seed=1))
    b = generate_null_triple(_cfg(structure="shared", seed=2))
    assert not np.array_equal(a.member("anchor").values, b.member("anchor").values)


def test_null_noiseless_limit_recovers_identical_partitions():
    # separation dominates noise (only their ratio matters here), so both
    # clusterings recover the shared labels exactly
    cfg = _cfg(structure="shared", community_separation=40.0, seed=3)
    triple = generate_null_triple(cfg)
    p1 = kmeans(triple.member("nonanchor_1"), 2, seed=0, restarts=5)
    p2 = kmeans(triple.member("nonanchor_2"), 2, seed=1, restarts=5)
    assert rand_index(p1.assignment, p2.assignment) == 1.0


def test_alt_noiseless_limit_rand_near_independence():
    # independent uniform labels with K=2: pair-concordance expectation is
    # 1/K^2 + (1 - 1/K)^2 = 0.5
    cfg = _cfg(n=400, structure="independent", community_separation=40.0, seed=4)
    triple = generate_alt_triple(cfg)
    p1 = kmeans(triple.member("nonanchor_1"), 2, seed=0, restarts=5)
    p2 = kmeans(triple.member("nonanchor_2"), 2, seed=1, restarts=5)
    ri = rand_index(p1.assignment, p2.assignment)
    assert abs(ri - 0.5) < 0.06
    assert ri < 0.9  # bounded away from 1


def test_alt_label_collision_guard():
    # with a single community every redraw collides with the shared labels
    with pytest.raises(GuardError, match="collid"):
        generate_alt_triple(_cfg(K_true=1, n=6, structure="independent"))


def test_null_rand_index_high_at_default_separation():
    scores = []
    for seed in range(20):
        triple = generate_null_triple(_cfg(n=300, structure="shared", seed=seed))
        p1 = kmeans(triple.member("nonanchor_1"), 2, seed=0, restarts=5)
        p2 = kmeans(triple.member("nonanchor_2"), 2, seed=1, restarts=5)
        scores.append(rand_index(p1.assignment, p2.assignment))
    assert np.mean(scores) >= 0.95


def test_null_mapped_distances_similar():
    from anchorstat.anchor import mapped_distances

    hits = 0
    for seed in range(20):
        triple = generate_null_triple(_cfg(n=300, structure="shared", seed=seed))
        anchor = triple.member("anchor")
        d1 = mapped_distances(anchor, kmeans(triple.member("nonanchor_1"), 2, seed=0, restarts=5))
        d2 = mapped_distances(anchor, kmeans(triple.member("nonanchor_2"), 2, seed=1, restarts=5))
        gap = np.mean(np.abs(d1.distances - d2.distances))
        if gap < 0.2 * np.mean(d1.distances):
            hits += 1
    assert hits == 20


def test_null_diff_mean_within_noise_band():
    from anchorstat.anchor import mapped_distances, paired_differences

    hits = 0
    seeds = range(40)
    for seed in seeds:
        triple = generate_null_triple(_cfg(n=300, structure="shared", seed=seed))
        anchor = triple.member("anchor")
        d1 = mapped_distances(anchor, kmeans(triple.member("nonanchor_1"), 2, seed=0, restarts=5))
        d2 = mapped_distances(anchor, kmeans(triple.member("nonanchor_2"), 2, seed=1, restarts=5))
        diff = paired_differences(d1, d2).diffs
        sd = diff.std(ddof=1) if diff.size > 1 else 0.0
        if abs(diff.mean()) <= 3.0 * sd / np.sqrt(diff.size):
            hits += 1
    assert hits / len(list(seeds)) >= 0.95


def test_monte_carlo_single_replicate_degenerate_ci():
    cfg = _cfg(n=60, structure="independent", seed=5)
    report = monte_carlo("alt", cfg, M=1, R=99)
    assert report.rate in (0.0, 1.0)
    assert report.degenerate_ci
    assert report.M == 1


def test_monte_carlo_alt_rejects():
    cfg = _cfg(n=200, structure="independent", seed=6)
    report = monte_carlo("alt", cfg, M=12, R=199)
    assert report.rate >= 0.9
    assert report.ci_low <= report.rate <= report.ci_high


def test_monte_carlo_scenario_validation():
    with pytest.raises(ParameterError):
        monte_carlo("bogus", _cfg(), M=1)
    with pytest.raises(ParameterError):
        monte_carlo("null", _cfg(), M=0)


def test_monte_carlo_counts_vacuous_as_accepts():
    # huge separation makes the two estimated partitions identical, so
    # every replicate is vacuous and nothing is rejected
    cfg = _cfg(n=80, community_separation=40.0, structure="shared", seed=7)
    report = monte_carlo("null", cfg, M=6, R=99)
    assert report.vacuous == 6
    assert report.rejections == 0


def test_power_monotone_in_separation():
    rates = []
    for sep in (2.0, 5.0, 8.0):
        cfg = _cfg(n=150, community_separation=sep, structure="independent", seed=8)
        rates.append(monte_carlo("alt", cfg, M=12, R=199).rate)
    # allow one small inversion per the statistical nature of the check
    inversions = sum(1 for a, b in zip(rates, rates[1:]) if b < a - 0.15)
    assert inversions <= 1
    assert rates[-1] >= rates[0]


def test_battery_quad_roles_and_alignment():
    quad = generate_battery_quad(_cfg(n=120, seed=9))
    assert set(quad.roles) == {
        "anchor",
        "nonanchor_aligned_1",
        "nonanchor_aligned_2",
        "nonanchor_drifted",
    }
    p1 = kmeans(quad.member("nonanchor_aligned_1"), 2, seed=0, restarts=5)
    p2 = kmeans(quad.member("nonanchor_aligned_2"), 2, seed=1, restarts=5)
    pd = kmeans(quad.member("nonanchor_drifted"), 2, seed=2, restarts=5)
    assert rand_index(p1.assignment, p2.assignment) > 0.9
    assert rand_index(p1.assignment, pd.assignment) < 0.75


def test_drift_family_temperatures_and_monotone_drift():
    cfg = _cfg(n=250, seed=10)
    fam = generate_drift_family(cfg, [(0.1, 0.05), (0.7, 0.35), (1.5, 0.75)])
    assert fam.temperatures["nonanchor_rho_0.1"] == 0.1
    assert fam.temperatures["nonanchor_base"] is None
    base = kmeans(fam.member("nonanchor_base"), 2, seed=0, restarts=5)
    agreements = []
    for rho in ("0.1", "0.7", "1.5"):
        part = kmeans(fam.member(f"nonanchor_rho_{rho}"), 2, seed=1, restarts=5)
        agreements.append(rand_index(base.assignment, part.assignment))
    assert agreements[0] > agreements[-1]


def test_drift_family_fraction_validation():
    with pytest.raises(ParameterError):
        generate_drift_family(_cfg(), [(0.5, 1.5)])


def test_rand_index_basics():
    assert rand_index(np.array([0, 0, 1, 1]), np.array([1, 1, 0, 0])) == 1.0
    assert rand_index(np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1])) == pytest.approx(1 / 3)
    with pytest.raises(ParameterError):
        rand_index(np.array([0, 1]), np.array([0, 1, 1]))
