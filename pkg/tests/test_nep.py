import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_unit
from nepclust.exceptions import ParameterError
from nepclust.features import FeatureSet, normalize
from nepclust.knn import KnnGraph, build_knn
from nepclust.nep import compute_all_nep, dump_tsv, edge_prob, neighbor_edge_prob, normalize_probs, to_sq_l2
from oracles import nep_scalar


def five_node():
    rows = [[1, 0.1, 0, 0], [1, -0.1, 0.05, 0], [1, 0, -0.1, 0.1], [0, 1, 0.2, 0], [0, 1, -0.1, 0.2]]
    return build_knn(normalize(FeatureSet(np.array(rows, dtype=float))), 2)


@pytest.mark.parametrize("a, d", [(1.0, 0.0), (0.0, 2.0), (-1.0, 4.0), (1.5, 0.0)])
def test_to_sq_l2(a, d):
    assert to_sq_l2(a) == d


@pytest.mark.parametrize(
    "d, tau, expected",
    [(0.0, 0.5, 1.0), (0.0, 3.0, 1.0), (1.0, 0.5, math.exp(-2)), (2.0, 0.5, math.exp(-4))],
)
def test_edge_prob(d, tau, expected):
    assert edge_prob(d, tau) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("tau", [0.0, -1.0])
def test_edge_prob_bad_tau(tau):
    with pytest.raises(ParameterError):
        edge_prob(1.0, tau)


def test_normalize_probs_uniform_and_two_term():
    equal = KnnGraph(np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]), np.full((4, 3), 0.4))
    np.testing.assert_allclose(normalize_probs(equal), 1 / 3, atol=1e-15)
    # a = 0.5 -> d = 1 -> e^-2 ; a = 0 -> d = 2 -> e^-4
    g = KnnGraph(np.array([[1, 2], [0, 2], [0, 1]]), np.array([[0.5, 0.0]] * 3))
    p_hat = normalize_probs(g, 0.5)
    np.testing.assert_allclose(p_hat[0], [0.880797077977882, 0.119202922022118], atol=1e-12)
    np.testing.assert_allclose(p_hat.sum(axis=1), 1.0, atol=1e-9)


def test_five_node_fixture_matches_oracle():
    g = five_node()
    np.testing.assert_array_equal(g.neighbors[0], [2, 1])
    np.testing.assert_array_equal(g.neighbors[1], [2, 0])
    nep = compute_all_nep(g, 0.5)
    # common neighbors of 0 and 1 are {2}; frozen from the scalar oracle
    assert nep.p_tilde[0, 1] == pytest.approx(0.5031777187670766, abs=1e-12)
    np.testing.assert_allclose(nep.p_tilde, nep_scalar(g.neighbors.tolist(), g.sims.tolist(), 0.5), atol=1e-12)
    lit = compute_all_nep(g, 0.5, literal=True)
    assert lit.p_tilde[0, 1] == pytest.approx(0.5031700128986749, abs=1e-12)


def test_empty_intersection_is_zero():
    g = five_node()
    nep = compute_all_nep(g)
    # node 3's second neighbor is 0; N_3 = {4, 0} and N_0 = {2, 1} share nothing
    assert g.neighbors[3, 1] == 0
    assert nep.p_tilde[3, 1] == 0.0
    assert neighbor_edge_prob(3, 0, g, nep.p_hat) == 0.0


def test_duplicate_points_sharing_all_neighbors():
    # points 0 and 1 are identical; with K = 3 each lists the other plus {2, 3}
    X = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.95, 0.3, 0.0], [0.95, 0.0, 0.3], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    g = build_knn(normalize(FeatureSet(X)), 3)
    nep = compute_all_nep(g)
    r = list(g.neighbors[0]).index(1)
    # common = {2, 3}; mass on them from each side is 1 - p_hat of the mutual edge
    expect = ((1 - nep.p_hat[0, r]) + (1 - nep.p_hat[1, list(g.neighbors[1]).index(0)])) / 2
    assert nep.p_tilde[0, r] == pytest.approx(expect, abs=1e-12)


def test_full_overlap_exact_one():
    # complete graph on 4 nodes: each pair shares the other two, uniform p_hat = 1/3
    g = KnnGraph(np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]), np.full((4, 3), 0.5))
    nep = compute_all_nep(g)
    np.testing.assert_allclose(nep.p_tilde, 2 / 3, atol=1e-12)


def test_neighbor_edge_prob_precondition():
    g = five_node()
    nep = compute_all_nep(g)
    with pytest.raises(ParameterError):
        neighbor_edge_prob(0, 4, g, nep.p_hat)


@pytest.mark.parametrize("literal", [False, True])
def test_batch_equals_scalar_oracle(rng, literal):
    for n, k in [(30, 5), (120, 8), (300, 12)]:
        g = build_knn(FeatureSet(random_unit(rng, n, 6), normalized=True), k)
        nep = compute_all_nep(g, 0.5, literal=literal)
        expect = nep_scalar(g.neighbors.tolist(), g.sims.tolist(), 0.5, literal=literal)
        np.testing.assert_allclose(nep.p_tilde, expect, rtol=0, atol=1e-12)


def test_batch_equals_per_pair(rng):
    g = build_knn(FeatureSet(random_unit(rng, 80, 5), normalized=True), 6)
    nep = compute_all_nep(g)
    lit = compute_all_nep(g, literal=True)
    for i in range(g.n):
        for r in range(g.k):
            j = g.neighbors[i, r]
            assert nep.p_tilde[i, r] == pytest.approx(neighbor_edge_prob(i, j, g, nep.p_hat), abs=1e-12)
            assert lit.p_tilde[i, r] == pytest.approx(neighbor_edge_prob(i, j, g, lit.p_hat, literal=True), abs=1e-12)


def test_rank_order_inversion_exists(rng):
    g = build_knn(FeatureSet(random_unit(rng, 200, 8), normalized=True), 10)
    nep = compute_all_nep(g)
    assert np.any(np.diff(nep.p_tilde, axis=1) > 0)
    # p_hat itself stays non-increasing
    assert np.all(np.diff(nep.p_hat, axis=1) <= 1e-15)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0.01, 1.0), min_size=8, max_size=8),
    st.integers(0, 2**31 - 1),
)
def test_overlap_monotone(weights, seed):
    # N_i = [j, a, b, s], N_j = [c, d, e, s']: swapping s' for s adds s to the common set
    p_hat = np.zeros((12, 4))
    w = np.asarray(weights)
    p_hat[0] = w[:4] / w[:4].sum()
    p_hat[1] = w[4:] / w[4:].sum()
    base = KnnGraph(np.array([[1, 2, 3, 4]] + [[5, 6, 7, 8]] + [[0, 1, 2, 3]] * 10), np.zeros((12, 4)))
    grown = KnnGraph(np.array([[1, 2, 3, 4]] + [[5, 6, 7, 4]] + [[0, 1, 2, 3]] * 10), np.zeros((12, 4)))
    assert neighbor_edge_prob(0, 1, grown, p_hat) >= neighbor_edge_prob(0, 1, base, p_hat)


def test_dump_tsv(tmp_path):
    g = five_node()
    nep = compute_all_nep(g)
    path = tmp_path / "nep.tsv"
    dump_tsv(nep, path)
    lines = path.read_text().splitlines()
    assert lines[0].split("\t") == ["i", "rank", "j", "a_ij", "p_hat", "p_tilde"]
    assert len(lines) == 1 + g.n * g.k
    assert float(lines[2].split("\t")[5]) == pytest.approx(nep.p_tilde[0, 1], abs=1e-15)
