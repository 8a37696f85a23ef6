"""
Métricas del embedding latente.
"""

import numpy as np
import pytest
from sklearn.manifold import trustworthiness as sklearn_trustworthiness

from latentroute.engine.metrics import (
    class_silhouette,
    continuity,
    embedding_report,
    geodesic_rank_correlation,
    isomap_report,
    stability_across_bins,
    trustworthiness,
)
from latentroute.errors import DomainError


@pytest.fixture(scope="module")
def cloud():
    rng = np.random.default_rng(0)
    high = rng.normal(size=(80, 5))
    low = high[:, :2] + 0.3 * rng.normal(size=(80, 2))
    return high, low


def test_identity_embedding_is_perfect(cloud):
    high, _ = cloud
    assert trustworthiness(high, high, 5) == pytest.approx(1.0)
    assert continuity(high, high, 5) == pytest.approx(1.0)


@pytest.mark.parametrize("k", [1, 5, 12])
def test_trustworthiness_matches_sklearn(cloud, k):
    high, low = cloud
    expected = sklearn_trustworthiness(high, low, n_neighbors=k)
    assert trustworthiness(high, low, k) == pytest.approx(expected, abs=1e-12)


def test_continuity_swaps_roles(cloud):
    high, low = cloud
    assert continuity(high, low, 5) == pytest.approx(trustworthiness(low, high, 5), abs=1e-15)


def test_scores_stay_in_unit_interval(cloud):
    high, _ = cloud
    shuffled = np.random.default_rng(1).permutation(high)
    for k in (1, 10, 39, 60):
        assert 0.0 <= trustworthiness(high, shuffled, k) <= 1.0
        assert 0.0 <= continuity(high, shuffled, k) <= 1.0


def test_large_k_uses_largest_admitted_k(cloud):
    high, low = cloud
    assert trustworthiness(high, low, 60) == pytest.approx(sklearn_trustworthiness(high, low, n_neighbors=39))
    assert continuity(high, low, 40) == pytest.approx(sklearn_trustworthiness(low, high, n_neighbors=39))


def test_all_neighbors_is_one(cloud):
    high, low = cloud
    assert trustworthiness(high, low, len(high) - 1) == 1.0


def test_invalid_inputs(cloud):
    high, low = cloud
    with pytest.raises(DomainError):
        trustworthiness(high, low[:-1], 5)
    with pytest.raises(DomainError):
        trustworthiness(high, low, 0)


def test_silhouette():
    rng = np.random.default_rng(2)
    low = np.vstack([rng.normal(0, 0.1, (20, 2)), rng.normal(5, 0.1, (20, 2))])
    labels = np.array([0] * 20 + [1] * 20)
    assert class_silhouette(low, labels) > 0.9
    assert class_silhouette(low, np.zeros(40)) == 0.0


def test_geodesic_correlation_on_a_line():
    t = np.sort(np.random.default_rng(3).uniform(0, 1, 60))
    high = np.column_stack([t, np.zeros(60), np.zeros(60)])
    low = np.column_stack([t, np.zeros(60)])
    assert geodesic_rank_correlation(high, low, 5) > 0.999


def test_embedding_report_fields(cloud):
    high, low = cloud
    report = embedding_report(high, low, np.arange(80) % 2, k=5)
    assert report.method == "vae"
    assert report.evaluated_points == 80
    assert -1.0 <= report.silhouette <= 1.0


def test_stability_across_bins(small_split, small_model):
    train_part, _ = small_split
    reports = stability_across_bins(train_part, small_model, [100, 200], k=8, seed=1)
    assert [r.subsample_size for r in reports] == [100, 200]
    assert all(0.0 <= r.trustworthiness <= 1.0 for r in reports)
    again = stability_across_bins(train_part, small_model, [100, 200], k=8, seed=1)
    assert [r.model_dump() for r in again] == [r.model_dump() for r in reports]


def test_bins_larger_than_dataset(small_split, small_model):
    train_part, _ = small_split
    with pytest.raises(DomainError):
        stability_across_bins(train_part, small_model, [len(train_part) + 1])


def test_isomap_baseline(small_split):
    train_part, _ = small_split
    report = isomap_report(train_part, 120, k=8, seed=1)
    assert report.method == "isomap"
    assert report.subsample_size == 120
    assert 0.0 <= report.continuity <= 1.0
