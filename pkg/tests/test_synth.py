import math

import networkx as nx
import numpy as np
import pytest

from distgl.graph import UpperWeights, laplacian_from_weights, smoothness
from distgl.io import read_instance, write_instance
from distgl.synth import (GenConfig, GenerationError, generate_comm_graph, generate_data_graph,
                          generate_instance, generate_smooth_signals)


def test_two_nodes_large_radius_gives_single_edge():
    g = generate_comm_graph(GenConfig(2, radius=2.0, seed=3))
    assert g.edges.tolist() == [[0, 1]]


def test_comm_graph_is_connected_and_deterministic():
    a = generate_comm_graph(GenConfig(80, seed=11))
    b = generate_comm_graph(GenConfig(80, seed=11))
    assert a.is_connected()
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.adjacency, b.adjacency)
    assert not np.array_equal(a.positions, generate_comm_graph(GenConfig(80, seed=12)).positions)


def test_mean_degree_at_default_radius():
    # expected mean degree for radius 2/sqrt(150) is about 11.6, minus border effects
    degs = [generate_comm_graph(GenConfig(150, seed=s)).mean_degree for s in range(20)]
    assert abs(np.mean(degs) - 11.57) <= 4.0


def test_unreachable_connectivity_raises():
    with pytest.raises(GenerationError, match="radius"):
        generate_comm_graph(GenConfig(100, radius=0.01, max_retries=5))


def test_config_validation():
    for bad in (dict(n_nodes=0), dict(n_nodes=5, radius=-1.0), dict(n_nodes=5, removal_rate=1.0),
                dict(n_nodes=5, n_signals=0), dict(n_nodes=5, weight_low=2.0)):
        with pytest.raises(ValueError):
            GenConfig(**bad)
    assert GenConfig(16).radius == pytest.approx(0.5)


@pytest.mark.parametrize("rate", [0.0, 0.3, 0.5, 0.7])
def test_data_graph_removal_and_weights(rate):
    cfg = GenConfig(60, removal_rate=rate, seed=4)
    g = generate_comm_graph(cfg)
    d = generate_data_graph(g, cfg)
    support = d.weights.support()
    assert len(support) == g.n_edges - math.floor(rate * g.n_edges)
    comm = {tuple(e) for e in g.edges.tolist()}
    assert {tuple(e) for e in support.tolist()} <= comm
    w = d.weights.on_edges(support)
    assert np.all((w >= 0.1) & (w <= 1.0))


def test_removal_keeps_every_edge_at_zero_rate():
    cfg = GenConfig(30, removal_rate=0.0, seed=1)
    g = generate_comm_graph(cfg)
    assert len(generate_data_graph(g, cfg).weights.support()) == g.n_edges


def test_signal_shape_and_column_sums():
    cfg = GenConfig(50, n_signals=5000, seed=2)
    g, d, X = generate_instance(cfg)
    assert X.shape == (50, 5000)
    assert np.all(np.isfinite(X))
    # signals are zero-mean; column sums of the per-signal vectors average out
    col = X.sum(axis=0) * math.sqrt(cfg.n_signals)
    assert abs(col.mean()) < 4 * col.std() / math.sqrt(cfg.n_signals)


def test_signal_covariance_matches_model():
    cfg = GenConfig(8, radius=0.8, n_signals=20000, seed=5, normalize_signals=False)
    g, d, X = generate_instance(cfg)
    target = np.linalg.pinv(laplacian_from_weights(d.weights)) + cfg.signal_noise * np.eye(8)
    emp = X @ X.T / cfg.n_signals
    assert np.max(np.abs(emp - target)) < 0.1 * np.max(np.abs(target))


def test_signals_smoother_on_truth_than_on_rewired_graph():
    cfg = GenConfig(80, n_signals=500, seed=6)
    g, d, X = generate_instance(cfg)
    G = nx.Graph()
    G.add_nodes_from(range(80))
    support = d.weights.support()
    G.add_weighted_edges_from((int(i), int(j), w) for (i, j), w in zip(support, d.weights.on_edges(support)))
    truth = smoothness(d.weights, X)
    rewired = []
    for s in range(5):
        H = G.copy()
        nx.double_edge_swap(H, nswap=5 * H.number_of_edges(), max_tries=10**6, seed=s)
        # degree-matched graph with the same multiset of weights
        ws = d.weights.on_edges(support)
        es = np.array(sorted(tuple(sorted(e)) for e in H.edges()))
        rewired.append(smoothness(UpperWeights.from_edges(80, es, ws[: len(es)]), X))
    assert truth < min(rewired)


def test_changing_signal_count_keeps_graphs():
    g1, d1, _ = generate_instance(GenConfig(40, n_signals=10, seed=9))
    g2, d2, _ = generate_instance(GenConfig(40, n_signals=700, seed=9))
    assert np.array_equal(g1.adjacency, g2.adjacency)
    assert np.array_equal(d1.weights.values, d2.weights.values)


def test_generation_is_bit_identical():
    a = generate_instance(GenConfig(30, n_signals=20, seed=13))
    b = generate_instance(GenConfig(30, n_signals=20, seed=13))
    assert np.array_equal(a[2], b[2])


def test_instance_round_trip(tmp_path):
    cfg = GenConfig(25, n_signals=7, seed=8)
    g, d, X = generate_instance(cfg)
    write_instance(tmp_path, g, d, X, cfg)
    g2, d2, X2, meta = read_instance(tmp_path)
    assert np.array_equal(g.positions, g2.positions)
    assert np.array_equal(g.adjacency, g2.adjacency)
    assert np.array_equal(d.weights.values, d2.weights.values)
    assert np.array_equal(X, X2)
    assert meta["config"]["seed"] == 8


def test_single_node_instance():
    cfg = GenConfig(1, n_signals=3)
    g, d, X = generate_instance(cfg)
    assert g.n_edges == 0 and X.shape == (1, 3)
    assert generate_smooth_signals(d, cfg).shape == (1, 3)
