import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clid.errors import DataError
from clid.unsup.clustering import (
    CFTree,
    cut_merges,
    fit_agglomerative,
    fit_birch,
    fit_gmm,
    fit_kmeans,
    ward_merges,
)
from clid.unsup.ensemble import fit_ensemble

CENTERS = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0], [6.0, 6.0]])


def blobs(seed, per=40, spread=0.3, centers=CENTERS):
    r = np.random.default_rng(seed)
    X = np.vstack([c + spread * r.normal(size=(per, centers.shape[1])) for c in centers])
    return X, np.repeat(np.arange(len(centers)), per)


def same_partition(a, b):
    pairs_a = {(i, j) for i, j in itertools.combinations(range(len(a)), 2) if a[i] == a[j]}
    pairs_b = {(i, j) for i, j in itertools.combinations(range(len(b)), 2) if b[i] == b[j]}
    return pairs_a == pairs_b


def test_kmeans_symmetric_example():
    X = np.array([[0.0, 0], [0, 1], [10, 0], [10, 1]])
    m = fit_kmeans(X, 2, seed=0)
    got = sorted(map(tuple, m.centroids.round(12)))
    assert got == [(0.0, 0.5), (10.0, 0.5)]
    assert m.assign(X[[2]])[0] == m.assign(X)[2]


def test_kmeans_rejects_too_few_points():
    with pytest.raises(DataError):
        fit_kmeans(np.zeros((3, 2)), 4)


@pytest.mark.parametrize("seed", range(5))
def test_kmeans_objective_non_increasing(seed):
    X, _ = blobs(seed, spread=1.5)
    m = fit_kmeans(X, 4, seed=seed)
    for trace in m.traces:
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))


@pytest.mark.parametrize("seed", range(5))
def test_gmm_log_likelihood_non_decreasing(seed):
    X, _ = blobs(seed, spread=1.5)
    m = fit_gmm(X, 4, seed=seed)
    ll = m.log_likelihood_trace
    assert len(ll) >= 2
    assert all(b >= a - 1e-9 for a, b in zip(ll, ll[1:]))


def test_gmm_two_blobs_confident():
    X, y = blobs(3, centers=CENTERS[:2])
    m = fit_gmm(X, 2, seed=0)
    P = m.predict_proba(X)
    assert np.allclose(P.sum(axis=1), 1)
    own = P[np.arange(len(X)), m.assign(X)]
    assert own.min() >= 0.99
    assert same_partition(m.assign(X), y)


def test_birch_recovers_blobs():
    X, y = blobs(11, spread=0.2)
    m = fit_birch(X, 4, threshold=0.5)
    assert same_partition(m.assign(X), y)


def test_birch_too_few_subclusters():
    with pytest.raises(DataError, match="smaller threshold"):
        fit_birch(np.random.default_rng(0).normal(size=(20, 2)) * 1e-3, 4, threshold=1.0)


def test_cftree_duplicate_insert_keeps_shape():
    X, _ = blobs(2)
    tree = CFTree(0.5, 5)
    for x in X:
        tree.insert(x)
    before = len(tree.leaves())
    for _ in range(10):
        tree.insert(X[0])
    assert len(tree.leaves()) == before
    assert sum(e.n for e in tree.leaves()) == len(X) + 10


def test_agglomerative_examples():
    m = fit_agglomerative(np.array([[0.0], [1.0], [10.0]]), 2)
    assert m.labels.tolist() == [0, 0, 1]
    X = np.random.default_rng(0).normal(size=(6, 2))
    assert sorted(fit_agglomerative(X, 6).labels.tolist()) == list(range(6))


def greedy_ward(X, k):
    """Textbook O(n^3) Ward: repeatedly merge the pair with the smallest SSE increase."""
    clusters = [[i] for i in range(len(X))]
    while len(clusters) > k:
        best = None
        for a, b in itertools.combinations(range(len(clusters)), 2):
            A, B = X[clusters[a]], X[clusters[b]]
            merged = np.vstack([A, B])
            inc = ((merged - merged.mean(0)) ** 2).sum() - ((A - A.mean(0)) ** 2).sum() - ((B - B.mean(0)) ** 2).sum()
            if best is None or inc < best[0]:
                best = (inc, a, b)
        _, a, b = best
        clusters[a] = clusters[a] + clusters[b]
        del clusters[b]
    labels = np.empty(len(X), dtype=int)
    for j, c in enumerate(clusters):
        labels[c] = j
    return labels


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(5, 14), st.integers(1, 4))
def test_ward_matches_greedy_oracle(seed, n, k):
    X = np.random.default_rng(seed).normal(size=(n, 2))
    assert same_partition(fit_agglomerative(X, k).labels, greedy_ward(X, k))


def test_ward_costs_sorted_and_cut_sizes():
    X = np.random.default_rng(4).normal(size=(30, 3))
    merges = ward_merges(X)
    assert len(merges) == 29
    costs = [c for *_, c in merges]
    assert costs == sorted(costs)
    for k in (1, 4, 30):
        assert len(set(cut_merges(30, merges, k))) == k


def test_ensemble_one_hot_structure():
    X, _ = blobs(5, centers=np.hstack([CENTERS, CENTERS]))
    ens = fit_ensemble(X, seed=0)
    F = ens.features(X)
    assert F.shape == (len(X), 16)
    assert np.all(F.sum(axis=1) == 4)
    assert set(np.unique(F)) <= {0.0, 1.0}
    assert np.array_equal(ens.features(X[:3]), ens.features(X[:3]))
    with pytest.raises(DataError):
        ens.features(X[:, :3])


def test_ensemble_training_points_keep_training_ids():
    X, _ = blobs(8, spread=1.2, centers=np.hstack([CENTERS, CENTERS]))
    ens = fit_ensemble(X, seed=0)
    P = ens.project(X)
    ids = ens.assignments(X)
    assert np.array_equal(ids[:, 3], ens.agglomerative.labels)
    assert np.array_equal(ids[:, 0], ens.kmeans.assign(P))
    # a duplicate of a training point lands with that point
    assert np.array_equal(ens.assignments(X[[17, 17]]), ids[[17, 17]])
