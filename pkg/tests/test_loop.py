import json
import math

import numpy as np
import pytest

from distgl.acceptance import CONVERGED_RUN
from distgl.graph import CommGraph, EdgeDifferences, UpperWeights, edge_differences
from distgl.init_protocol import run_initialization
from distgl.ledger import MessageLedger, Transport
from distgl.loop import (GlobalRunConfig, baseline_objective, central_node, centralized_cost,
                         run_baseline_logdegree, run_centralized, run_distributed, symmetry_project)
from distgl.synth import GenConfig, generate_instance


def zdiff(n, edges, z):
    Z = EdgeDifferences(n)
    for (i, j), v in zip(edges, z):
        Z.tables[i][j] = Z.tables[j][i] = float(v)
    return Z


def instance(n=40, m=30, seed=0, factor=2.5):
    g, d, X = generate_instance(GenConfig(n, radius=factor / math.sqrt(n), n_signals=m, seed=seed))
    return g, d, X, edge_differences(X, g)


def test_symmetry_projection():
    assert symmetry_project(0.2, 0.6) == pytest.approx(0.4)
    assert symmetry_project(1.0, 1.0) == 1.0
    a = np.array([0.1, 0.5])
    assert np.allclose(symmetry_project(a, a[::-1]), [0.3, 0.3])


def test_config_validation():
    for bad in (dict(eta=0.0), dict(lr=-1.0), dict(local_window=0), dict(optimizer_mode="rmsprop"),
                dict(data_scale="x"), dict(central_downlink="x")):
        with pytest.raises(ValueError):
            GlobalRunConfig(**bad)


@pytest.mark.parametrize("z", [0.5, 2.0, 3.5])
@pytest.mark.parametrize("method", [run_distributed, run_centralized])
def test_two_node_closed_form(method, z):
    # minimizer of w*z + 2*(1 - w)^2 for N = 2 is 1 - z/4
    g = CommGraph.from_edges(2, [(0, 1)])
    res = method(g, zdiff(2, [(0, 1)], [z]), CONVERGED_RUN)
    assert res.learned.values[0] == pytest.approx(1 - z / 4, abs=1e-4)


def test_two_node_zero_difference_saturates_degree():
    g = CommGraph.from_edges(2, [(0, 1)])
    res = run_centralized(g, zdiff(2, [(0, 1)], [0.0]), CONVERGED_RUN)
    assert res.learned.values[0] == pytest.approx(1.0, abs=1e-4)


def test_large_difference_drops_edge():
    g = CommGraph.from_edges(2, [(0, 1)])
    res = run_distributed(g, zdiff(2, [(0, 1)], [10.0]), CONVERGED_RUN)
    assert res.learned.values[0] == 0.0


def test_distributed_cost_is_init_plus_exchange():
    g, _, X, _ = instance(seed=1)
    led, tr = MessageLedger(), Transport(g.adjacency)
    Z = run_initialization(g, X, led, tr)
    init = led.init_total
    res = run_distributed(g, Z, GlobalRunConfig(global_round_cap=7), led, tr)
    assert res.rounds_used == len(res.trace) <= 7
    assert led.total == init + 2 * g.n_edges * res.rounds_used
    assert tr.matches(led)


def test_distributed_output_shape_and_trace():
    g, _, _, Z = instance(seed=2)
    res = run_distributed(g, Z, GlobalRunConfig(global_round_cap=5))
    assert np.all(res.learned.values >= 0)
    off = np.setdiff1d(np.arange(len(res.learned.values)), g.edge_index)
    assert not res.learned.values[off].any()
    for t in res.trace:
        assert t["max_local_steps"] <= 5000
        assert t["objective_local"] <= t["objective_start"] + 1e-12
    payload = json.loads(res.to_json(g))
    assert payload["method"] == "distributed" and len(payload["edges"]) == g.n_edges
    assert res.edges_csv(g).splitlines()[0] == "i,j,weight"


def test_distributed_invariant_under_relabeling():
    g, _, X, Z = instance(n=30, seed=3)
    perm = np.random.default_rng(0).permutation(30)
    g2 = CommGraph.from_edges(30, [(perm[i], perm[j]) for i, j in g.edges])
    X2 = np.empty_like(X)
    X2[perm] = X
    cfg = GlobalRunConfig(global_round_cap=5)
    a = run_distributed(g, Z, cfg).learned.to_dense()
    b = run_distributed(g2, edge_differences(X2, g2), cfg).learned.to_dense()
    assert np.allclose(a, b[np.ix_(perm, perm)], rtol=0, atol=1e-9)


def test_backends_give_same_run():
    pytest.importorskip("numba")
    g, _, _, Z = instance(seed=4)
    cfg = GlobalRunConfig(global_round_cap=4)
    a = run_distributed(g, Z, cfg, backend="numba")
    b = run_distributed(g, Z, cfg, backend="numpy")
    assert np.array_equal(a.learned.values, b.learned.values)
    assert a.trace == b.trace


def test_centralized_cost_examples():
    star = CommGraph.from_edges(5, [(0, k) for k in range(1, 5)])
    assert central_node(star) == 0
    assert centralized_cost(star, 2) == {"central_up": 8, "central_down": 4, "total": 12}
    path = CommGraph.from_edges(3, [(0, 1), (1, 2)])
    assert centralized_cost(path, 1)["total"] == 4
    assert centralized_cost(CommGraph.from_edges(1, []), 50)["total"] == 0
    full = centralized_cost(path, 1, downlink="full")
    assert full["central_down"] == 2 * 2


def test_centralized_ledger_matches_cost_model():
    g, _, X, Z = instance(seed=5)
    led, tr = MessageLedger(), Transport(g.adjacency)
    res = run_centralized(g, Z, GlobalRunConfig(central_step_cap=300), n_signals=X.shape[1], ledger=led,
                          transport=tr)
    assert led.snapshot() == {**MessageLedger().snapshot(), **{k: v for k, v in
                              centralized_cost(g, X.shape[1], res.learned).items() if k != "total"}}
    assert tr.matches(led)


def test_centralized_cost_linear_in_signals():
    g, _, _, _ = instance(seed=6)
    c = [centralized_cost(g, m)["total"] for m in (100, 200, 300)]
    assert c[2] - c[1] == c[1] - c[0] > 0


def test_baseline_single_edge_closed_form():
    # d/dw [w z - 2 log w + 0.1 w^2] = 0  ->  0.2 w^2 + z w - 2 = 0
    g = CommGraph.from_edges(2, [(0, 1)])
    res = run_baseline_logdegree(g, zdiff(2, [(0, 1)], [1.0]), cfg=CONVERGED_RUN)
    want = (-1 + math.sqrt(1 + 16 * 0.1)) / (4 * 0.1)
    assert res.learned.values[0] == pytest.approx(want, abs=1e-4)


def test_baseline_keeps_degrees_positive():
    g, _, X, Z = instance(seed=7)
    res = run_baseline_logdegree(g, Z, n_signals=X.shape[1])
    deg = res.learned.to_dense().sum(axis=1)
    assert np.all(deg > 0)
    e = g.edges
    start = baseline_objective(np.ones(len(e)), Z.edge_values(e), e, g.n_nodes, 1.0, 0.1)
    assert baseline_objective(res.learned.on_edges(e), Z.edge_values(e), e, g.n_nodes, 1.0, 0.1) < start


def test_methods_on_disconnected_pair_of_edges():
    g = CommGraph.from_edges(4, [(0, 1), (2, 3)])
    Z = zdiff(4, [(0, 1), (2, 3)], [0.4, 0.8])
    w = run_distributed(g, Z, CONVERGED_RUN).learned
    assert w.on_edges(np.array([[0, 1]]))[0] > w.on_edges(np.array([[2, 3]]))[0]
    # nothing can be gathered at one node across components
    with pytest.raises(ValueError, match="connected"):
        run_centralized(g, Z, CONVERGED_RUN)


def test_incomplete_differences_rejected():
    g = CommGraph.from_edges(3, [(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        run_distributed(g, zdiff(3, [(0, 1)], [1.0]))


def test_learned_weights_are_upper_weights():
    g, _, _, Z = instance(n=20, seed=8)
    for res in (run_centralized(g, Z, GlobalRunConfig(central_step_cap=200)),
                run_baseline_logdegree(g, Z, cfg=GlobalRunConfig(central_step_cap=200))):
        assert isinstance(res.learned, UpperWeights)
        W = res.learned.to_dense()
        assert np.array_equal(W, W.T) and np.all(W >= 0)
