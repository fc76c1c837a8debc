import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_unit
from fixtures import nep_from_rows
from nepclust.early_stop import (
    EARLY_STOP,
    EdgeSet,
    early_stop_edges,
    early_stop_edges_scan,
    ending_position_stats,
    ending_stats_sweep,
    matched_similarity_threshold,
    stop_positions,
)
from nepclust.exceptions import ParameterError
from nepclust.features import FeatureSet
from nepclust.knn import build_knn
from nepclust.nep import compute_all_nep


def test_stop_trace():
    nep = nep_from_rows([[0.9, 0.5, 0.8, 0.1]])
    es = early_stop_edges(nep, 0.4)
    row0 = es.rank[es.i == 0]
    np.testing.assert_array_equal(row0, [0, 1, 2])
    np.testing.assert_allclose(es.w[es.i == 0], [0.9, 0.5, 0.8])
    np.testing.assert_array_equal(es.j[es.i == 0], [1, 2, 3])
    assert es.kind == EARLY_STOP


def test_first_entry_below_threshold_gives_nothing():
    nep = nep_from_rows([[0.3, 0.9, 0.9]])
    es = early_stop_edges(nep, 0.4)
    assert not np.any(es.i == 0)


def test_theta_zero_keeps_every_edge(rng):
    g = build_knn(FeatureSet(random_unit(rng, 60, 5), normalized=True), 7)
    nep = compute_all_nep(g)
    es = early_stop_edges(nep, 0.0)
    assert len(es) == 60 * 7


@pytest.mark.parametrize("theta", [-0.1, 1.5])
def test_theta_range(theta):
    with pytest.raises(ParameterError):
        early_stop_edges(nep_from_rows([[0.5, 0.5]]), theta)


def test_stop_positions_no_stop():
    np.testing.assert_array_equal(stop_positions(np.array([[0.5, 0.6], [0.1, 0.9]]), 0.4), [2, 0])


def test_scan_matches_vectorized_and_reads_nothing_past_stop(rng):
    g = build_knn(FeatureSet(random_unit(rng, 150, 6), normalized=True), 10)
    nep = compute_all_nep(g)
    theta = float(np.median(nep.p_tilde))
    reads = []
    scan = early_stop_edges_scan(nep, theta, on_read=lambda i, r: reads.append((i, r)))
    vec = early_stop_edges(nep, theta)
    assert scan.pairs() == vec.pairs()
    np.testing.assert_array_equal(scan.w, vec.w)
    stop = stop_positions(nep.p_tilde, theta)
    for i, r in reads:
        assert r <= stop[i]
    assert len(reads) == int(np.minimum(stop + 1, nep.k).sum())


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(st.floats(0, 1), min_size=6, max_size=6), min_size=1, max_size=8),
    st.floats(0, 1),
    st.floats(0, 1),
)
def test_prefix_and_monotone_in_theta(rows, t1, t2):
    nep = nep_from_rows(rows)
    lo, hi = min(t1, t2), max(t1, t2)
    e_lo, e_hi = early_stop_edges(nep, lo), early_stop_edges(nep, hi)
    assert e_hi.pairs() <= e_lo.pairs()
    for es, t in ((e_lo, lo), (e_hi, hi)):
        for i in range(nep.n):
            ranks = es.rank[es.i == i]
            # kept ranks form a prefix and all pass the threshold
            np.testing.assert_array_equal(ranks, np.arange(ranks.size))
            assert np.all(nep.p_tilde[i, ranks] >= t)
            if ranks.size < nep.k:
                assert nep.p_tilde[i, ranks.size] < t


def test_edgeset_tsv(tmp_path):
    es = EdgeSet([0, 1], [2, 0], [0.5, 0.25], EARLY_STOP)
    path = tmp_path / "e.tsv"
    es.to_tsv(path)
    assert path.read_text() == "0\t2\t0.5\n1\t0\t0.25\n"
    with pytest.raises(ParameterError):
        EdgeSet([0], [1, 2], [0.5], EARLY_STOP)


def two_blobs(rng, n_each=40, d=8, spread=0.05):
    a = np.zeros(d)
    a[0] = 1
    b = np.zeros(d)
    b[1] = 1
    X = np.vstack([a + spread * rng.standard_normal((n_each, d)), b + spread * rng.standard_normal((n_each, d))])
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return FeatureSet(X, normalized=True), np.repeat([0, 1], n_each)


def test_ending_stats_single_cluster_is_zero(rng):
    fs = FeatureSet(random_unit(rng, 50, 4), normalized=True)
    nep = compute_all_nep(build_knn(fs, 8))
    labels = np.zeros(50, dtype=int)
    for mode in ("raw_similarity", "sorted_nep", "unsorted_nep"):
        rep = ending_position_stats(nep, labels, mode, 0.9)
        assert rep.negative_fraction_at_ending == 0.0
        assert rep.num_nodes == 50


def test_ending_stats_separated_clusters(rng):
    fs, labels = two_blobs(rng)
    # K exceeds the cluster size, so every row crosses into the other blob
    nep = compute_all_nep(build_knn(fs, 45))
    rep = ending_position_stats(nep, labels, "raw_similarity", 0.5)
    assert rep.num_endings == 80
    assert rep.negative_fraction_at_ending == 1.0


def test_ending_stats_bad_mode():
    with pytest.raises(ParameterError):
        ending_position_stats(nep_from_rows([[0.5, 0.5]]), np.zeros(3), "nope", 0.3)


def test_ending_stats_nothing_ends():
    nep = nep_from_rows([[0.9, 0.9]] * 3)
    rep = ending_position_stats(nep, np.arange(3), "unsorted_nep", 0.1)
    assert rep.num_endings == 0 and rep.negative_fraction_at_ending == 0.0


def test_matched_threshold_gives_requested_count(rng):
    g = build_knn(FeatureSet(random_unit(rng, 100, 6), normalized=True), 8)
    nep = compute_all_nep(g)
    labels = rng.integers(0, 5, 100)
    for m in (0, 1, 37, 99, 100):
        t = matched_similarity_threshold(g, m)
        assert ending_position_stats(nep, labels, "raw_similarity", t).num_endings == m


def test_sweep_shape(rng):
    fs, labels = two_blobs(rng)
    nep = compute_all_nep(build_knn(fs, 10))
    rows = ending_stats_sweep(nep, labels, [0.1, 0.3])
    assert [r["threshold"] for r in rows] == [0.1, 0.3]
    for r in rows:
        assert set(r) == {"threshold", "raw_similarity", "sorted_nep", "unsorted_nep", "raw_similarity_matched"}
        assert r["raw_similarity_matched"]["counts"]["endings"] == r["unsorted_nep"]["counts"]["endings"]
