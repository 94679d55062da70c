import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distgl.graph import (CommGraph, DataGraph, UpperWeights, edge_differences, hop_distances,
                          index_pair, laplacian_from_weights, n_pairs, pair_index, smoothness)


def random_weights(rng, n, density=0.6):
    k = n_pairs(n)
    return UpperWeights(rng.uniform(0, 2, k) * (rng.random(k) < density), n)


def test_pair_index_order_n4():
    got = [pair_index(i, j, 4) for i, j in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]]
    assert got == list(range(6))
    assert pair_index(3, 1, 4) == pair_index(1, 3, 4)


@given(st.integers(2, 400).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n * (n - 1) // 2 - 1))))
def test_index_pair_round_trip(nk):
    n, k = nk
    i, j = index_pair(k, n)
    assert 0 <= i < j < n
    assert pair_index(i, j, n) == k


def test_index_pair_vectorized_matches_triu():
    for n in (2, 3, 7, 50):
        i, j = index_pair(np.arange(n_pairs(n)), n)
        ti, tj = np.triu_indices(n, 1)
        assert np.array_equal(i, ti) and np.array_equal(j, tj)


def test_laplacian_single_edge():
    L = laplacian_from_weights(UpperWeights([1.0], 2))
    assert np.array_equal(L, [[1, -1], [-1, 1]])


def test_laplacian_of_zero_weights():
    assert not laplacian_from_weights(UpperWeights.zeros(5)).any()


def test_laplacian_rows_sum_to_zero():
    rng = np.random.default_rng(0)
    w = random_weights(rng, 5)
    L = laplacian_from_weights(w)
    W = w.to_dense()
    # row sums computed independently from the dense weights
    for i in range(5):
        assert abs(L[i, i] - sum(W[i, j] for j in range(5) if j != i)) < 1e-12
        assert abs(L[i].sum()) < 1e-12
    assert np.array_equal(L, L.T)


def test_laplacian_is_linear():
    rng = np.random.default_rng(1)
    w1, w2 = random_weights(rng, 8), random_weights(rng, 8)
    a, b = 0.7, 2.3
    lhs = laplacian_from_weights(UpperWeights(a * w1.values + b * w2.values, 8))
    rhs = a * laplacian_from_weights(w1) + b * laplacian_from_weights(w2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_laplacian_psd():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(2, 15))
        L = laplacian_from_weights(random_weights(rng, n))
        x = rng.standard_normal(n)
        assert x @ L @ x >= -1e-9


def test_smoothness_path_example():
    w = UpperWeights.from_edges(3, [(0, 1), (1, 2)], [1.0, 2.0])
    X = np.array([[0.0], [1.0], [3.0]])
    assert smoothness(w, X) == 9.0
    L = laplacian_from_weights(w)
    assert np.trace(X.T @ L @ X) == pytest.approx(9.0)


def test_smoothness_trivial_cases():
    rng = np.random.default_rng(3)
    w = random_weights(rng, 6)
    assert smoothness(w, np.tile(rng.standard_normal(4), (6, 1))) == 0.0
    assert smoothness(UpperWeights.zeros(6), rng.standard_normal((6, 4))) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 20), st.integers(1, 10), st.integers(0, 2**31))
def test_smoothness_equals_trace_form(n, m, seed):
    rng = np.random.default_rng(seed)
    w = random_weights(rng, n)
    X = rng.standard_normal((n, m))
    s = smoothness(w, X)
    assert abs(s - np.trace(X.T @ laplacian_from_weights(w) @ X)) <= 1e-9 * (1 + abs(s))


def test_smoothness_dimension_mismatch():
    with pytest.raises(ValueError):
        smoothness(UpperWeights.zeros(4), np.zeros((3, 2)))


def test_upper_weights_validation():
    with pytest.raises(ValueError):
        UpperWeights([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        UpperWeights([1.0, -1.0, 0.0], 3)


def test_dense_round_trip():
    rng = np.random.default_rng(4)
    w = random_weights(rng, 9)
    W = w.to_dense()
    assert np.array_equal(W, W.T) and not np.diag(W).any()
    assert np.array_equal(UpperWeights.from_dense(W).values, w.values)


def test_comm_graph_radius_rule():
    rng = np.random.default_rng(5)
    pos = rng.random((30, 2))
    g = CommGraph.from_positions(pos, 0.3)
    for i in range(30):
        for j in range(30):
            if i != j:
                assert g.adjacency[i, j] == (np.linalg.norm(pos[i] - pos[j]) <= 0.3)
    assert not np.diag(g.adjacency).any()
    assert [tuple(e) for e in g.edges] == sorted(tuple(e) for e in g.edges)


def test_comm_graph_rejects_asymmetric():
    A = np.zeros((3, 3), dtype=bool)
    A[0, 1] = True
    with pytest.raises(ValueError):
        CommGraph(np.zeros((3, 2)), 1.0, A)


def test_hop_distances_and_connectivity():
    g = CommGraph.from_edges(4, [(0, 1), (1, 2)])
    assert hop_distances(g, 0).tolist() == [0, 1, 2, -1]
    assert not g.is_connected()
    assert CommGraph.from_edges(3, [(0, 1), (1, 2)]).is_connected()


def test_data_graph_must_span_comm_graph():
    g = CommGraph.from_edges(3, [(0, 1)])
    DataGraph(UpperWeights.from_edges(3, [(0, 1)], [0.5]), g)
    with pytest.raises(ValueError):
        DataGraph(UpperWeights.from_edges(3, [(1, 2)], [0.5]), g)


def test_edge_differences_examples():
    g = CommGraph.from_edges(2, [(0, 1)])
    Z = edge_differences(np.array([[0.0], [3.0]]), g)
    assert Z.get(0, 1) == Z.get(1, 0) == 9.0
    g3 = CommGraph.from_edges(3, [(0, 1), (1, 2)])
    Z = edge_differences(np.ones((3, 4)), g3)
    assert all(v == 0.0 for t in Z.tables for v in t.values())
    assert Z.is_complete(g3)
