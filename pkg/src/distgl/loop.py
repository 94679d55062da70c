"""Distributed algorithm, its centralized counterpart, and the log-degree baseline."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from . import kernels
from .graph import CommGraph, DataGraph, EdgeDifferences, UpperWeights, hop_distances
from .ledger import MessageLedger, Transport
from .node import ADAM_EPS, BETA1, BETA2, NonFiniteError


@dataclass(frozen=True)
class GlobalRunConfig:
    eta: float = 1.0
    lr: float = 0.01
    local_tol: float = 1e-6
    local_window: int = 10
    local_step_cap: int = 5000
    global_tol: float = 1e-4
    global_round_cap: int = 100
    optimizer_mode: str = "adam"
    # iteration cap for the single-optimizer methods (centralized, baseline)
    central_step_cap: int = 20000
    # "global": data term scaled by 1/N; "local": by 1/(deg_i + 1)
    data_scale: str = "global"
    # result delivery for the centralized cost model: incident | full | support
    central_downlink: str = "incident"
    baseline_alpha: float = 1.0
    baseline_beta: float = 0.1

    def __post_init__(self):
        for name in ("eta", "lr", "local_tol", "global_tol", "baseline_alpha", "baseline_beta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("local_window", "local_step_cap", "global_round_cap", "central_step_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.optimizer_mode not in ("adam", "sgd"):
            raise ValueError("optimizer_mode must be 'adam' or 'sgd'")
        if self.data_scale not in ("global", "local"):
            raise ValueError("data_scale must be 'global' or 'local'")
        if self.central_downlink not in ("incident", "full", "support"):
            raise ValueError("central_downlink must be incident, full or support")


@dataclass
class RunResult:
    method: str
    learned: UpperWeights
    ledger: MessageLedger
    rounds_used: int
    converged: bool
    trace: list = field(default_factory=list)

    def edge_list(self, g: CommGraph) -> list:
        w = self.learned.on_edges(g.edges)
        return [(int(i), int(j), float(x)) for (i, j), x in zip(g.edges, w)]

    def edges_csv(self, g: CommGraph) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["i", "j", "weight"])
        for i, j, x in self.edge_list(g):
            wr.writerow([i, j, repr(x)])
        return buf.getvalue()

    def to_json(self, g: CommGraph) -> str:
        return json.dumps(
            {
                "method": self.method,
                "n_nodes": self.learned.n_nodes,
                "rounds_used": self.rounds_used,
                "converged": self.converged,
                "ledger": self.ledger.snapshot(),
                "total_messages": self.ledger.total,
                "edges": self.edge_list(g),
                "trace": self.trace,
            },
            indent=1,
        )


def symmetry_project(wi_j: float, wj_i: float) -> float:
    return (wi_j + wj_i) / 2.0


class _Packed:
    """Directed half-edge layout: node i owns entries indptr[i]:indptr[i+1]."""

    def __init__(self, g: CommGraph, Z: EdgeDifferences):
        n = g.n_nodes
        counts = np.array([len(a) for a in g.neighbors], dtype=np.int64)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.nbr = np.concatenate(g.neighbors).astype(np.int64) if n else np.zeros(0, np.int64)
        self.owner = np.repeat(np.arange(n), counts)
        try:
            self.z = np.array([Z.tables[i][j] for i, j in zip(self.owner, self.nbr)], dtype=np.float64)
        except KeyError as e:
            raise ValueError(f"edge differences incomplete: missing {e}") from None
        pos = {(int(i), int(j)): p for p, (i, j) in enumerate(zip(self.owner, self.nbr))}
        self.rev = np.array([pos[(int(j), int(i))] for i, j in zip(self.owner, self.nbr)], dtype=np.int64)
        self.upper = np.flatnonzero(self.owner < self.nbr)
        self.n = n
        self.counts = counts

    def inv_scale(self, cfg: GlobalRunConfig) -> np.ndarray:
        if cfg.data_scale == "global":
            return np.full(self.n, 1.0 / self.n)
        return 1.0 / (self.counts + 1.0)

    def degrees(self, w):
        return np.bincount(self.owner, weights=w, minlength=self.n)

    def objective(self, w, cfg: GlobalRunConfig) -> float:
        """Sum of the per-node local objectives at directed weights ``w``."""
        inv = self.inv_scale(cfg)
        data = np.bincount(self.owner, weights=w * self.z, minlength=self.n) * inv
        pen = np.maximum(cfg.eta - self.degrees(w), 0.0)
        return float(np.sum(data + pen * pen))

    def to_upper(self, w) -> UpperWeights:
        edges = np.column_stack([self.owner[self.upper], self.nbr[self.upper]])
        return UpperWeights.from_edges(self.n, edges, w[self.upper])


def run_distributed(g: CommGraph, Z: EdgeDifferences, cfg: GlobalRunConfig = GlobalRunConfig(),
                    ledger: MessageLedger | None = None, transport: Transport | None = None,
                    backend: str | None = None) -> RunResult:
    """Alternate per-node local convergence with 1-hop weight averaging.

    ``ledger`` may already hold the initialization cost; weight exchange is
    added to it. Convergence detection is free (omniscient observer).
    """
    ledger = MessageLedger() if ledger is None else ledger
    P = _Packed(g, Z)
    # data-term scaling folded into z so the kernel runs with inv_n = 1
    z_eff = P.z * P.inv_scale(cfg)[P.owner]
    inv_n = 1.0
    E = len(P.nbr)
    w = np.ones(E)
    m = np.zeros(E)
    v = np.zeros(E)
    b1p = np.ones(g.n_nodes)
    b2p = np.ones(g.n_nodes)
    steps = np.zeros(g.n_nodes, dtype=np.int64)
    trace = []
    converged = False
    rounds = 0
    for rounds in range(1, cfg.global_round_cap + 1):
        f_start = P.objective(w, cfg)
        used = kernels.local_phase(
            P.indptr, z_eff, w, m, v, b1p, b2p, steps, eta=cfg.eta, inv_n=inv_n, lr=cfg.lr,
            tol=cfg.local_tol, window=cfg.local_window, cap=cfg.local_step_cap,
            adam=cfg.optimizer_mode == "adam", backend=backend,
        )
        f_local = P.objective(w, cfg)
        # every node sends each w_ij to j: one scalar per direction per edge
        ledger.charge("weight_exchange", E)
        if transport is not None:
            transport.send_many(P.owner, P.nbr, 1, "weight_exchange")
        avg = symmetry_project(w, w[P.rev])
        delta = float(np.max(np.abs(avg - w))) if E else 0.0
        w = np.maximum(avg, 0.0)
        if not np.all(np.isfinite(w)):
            raise NonFiniteError("non-finite weight after symmetry projection")
        trace.append({
            "round": rounds,
            "objective_start": f_start,
            "objective_local": f_local,
            "objective": P.objective(w, cfg),
            "max_change": delta,
            "max_local_steps": int(used.max(initial=0)),
        })
        if delta < cfg.global_tol:
            converged = True
            break
    return RunResult("distributed", P.to_upper(w), ledger, rounds, converged, trace)


def _adam_minimize(x0, grad_fn, obj_fn, project, cfg: GlobalRunConfig):
    """Single projected Adam (or SGD) run with the windowed relative-change stop."""
    x = project(np.array(x0, dtype=np.float64))
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    b1p = b2p = 1.0
    hist = [obj_fn(x)]
    steps = 0
    for steps in range(1, cfg.central_step_cap + 1):
        g = grad_fn(x)
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("non-finite gradient")
        if cfg.optimizer_mode == "adam":
            b1p *= BETA1
            b2p *= BETA2
            m = BETA1 * m + (1.0 - BETA1) * g
            v = BETA2 * v + (1.0 - BETA2) * (g * g)
            x = x - cfg.lr * (m / (1.0 - b1p)) / (np.sqrt(v / (1.0 - b2p)) + ADAM_EPS)
        else:
            x = x - cfg.lr * g
        x = project(x)
        hist.append(obj_fn(x))
        if len(hist) > cfg.local_window:
            old = hist[-1 - cfg.local_window]
            if abs(hist[-1] - old) <= cfg.local_tol * abs(old):
                return x, steps, True, hist
    return x, steps, False, hist


def run_centralized(g: CommGraph, Z: EdgeDifferences, cfg: GlobalRunConfig = GlobalRunConfig(),
                    n_signals: int = 1, ledger: MessageLedger | None = None,
                    transport: Transport | None = None) -> RunResult:
    """One optimizer over all weights, symmetry projection and ReLU after every step."""
    ledger = MessageLedger() if ledger is None else ledger
    P = _Packed(g, Z)
    inv = P.inv_scale(cfg)[P.owner]

    def grad(w):
        # derivative w.r.t. the shared edge weight: both directed partials; keeps
        # Adam's per-entry scaling identical on the two halves of an edge
        pen = np.maximum(cfg.eta - P.degrees(w), 0.0)
        g = P.z * inv - 2.0 * pen[P.owner]
        return g + g[P.rev]

    def project(w):
        return np.maximum(symmetry_project(w, w[P.rev]), 0.0)

    w, steps, conv, hist = _adam_minimize(np.ones(len(P.nbr)), grad, lambda w: P.objective(w, cfg),
                                          project, cfg)
    learned = P.to_upper(w)
    _charge_central(g, n_signals, learned, cfg.central_downlink, ledger, transport)
    trace = [{"round": 1, "objective_start": hist[0], "objective": hist[-1], "steps": steps}]
    return RunResult("centralized", learned, ledger, steps, conv, trace)


def baseline_objective(w_edges, z_edges, edges, n_nodes, alpha, beta) -> float:
    d = np.bincount(edges[:, 0], weights=w_edges, minlength=n_nodes)
    d += np.bincount(edges[:, 1], weights=w_edges, minlength=n_nodes)
    return float(np.dot(w_edges, z_edges) - alpha * np.sum(np.log(np.maximum(d, 1e-12)))
                 + beta * np.dot(w_edges, w_edges))


def run_baseline_logdegree(g: CommGraph, Z: EdgeDifferences, alpha: float | None = None,
                           beta: float | None = None, cfg: GlobalRunConfig = GlobalRunConfig(),
                           n_signals: int = 1, ledger: MessageLedger | None = None,
                           transport: Transport | None = None) -> RunResult:
    """Centralized log-degree graph learning over the communication edges.

    Minimizes ``sum w_e z_e - alpha * sum_i log d_i + beta * ||w||^2`` over
    w >= 0 by projected Adam. Degrees are clamped at 1e-12 inside the log.
    """
    alpha = cfg.baseline_alpha if alpha is None else alpha
    beta = cfg.baseline_beta if beta is None else beta
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    ledger = MessageLedger() if ledger is None else ledger
    edges = g.edges
    n = g.n_nodes
    z = Z.edge_values(edges)

    def grad(w):
        d = np.bincount(edges[:, 0], weights=w, minlength=n)
        d += np.bincount(edges[:, 1], weights=w, minlength=n)
        inv_d = 1.0 / np.maximum(d, 1e-12)
        return z - alpha * (inv_d[edges[:, 0]] + inv_d[edges[:, 1]]) + 2.0 * beta * w

    w, steps, conv, hist = _adam_minimize(
        np.ones(len(edges)), grad, lambda w: baseline_objective(w, z, edges, n, alpha, beta),
        lambda w: np.maximum(w, 0.0), cfg,
    )
    learned = UpperWeights.from_edges(n, edges, w)
    _charge_central(g, n_signals, learned, cfg.central_downlink, ledger, transport)
    trace = [{"round": 1, "objective_start": hist[0], "objective": hist[-1], "steps": steps}]
    return RunResult("baseline", learned, ledger, steps, conv, trace)


def central_node(g: CommGraph) -> int:
    """Node of minimum eccentricity (lowest id on ties)."""
    if g.n_nodes <= 1:
        return 0
    D = shortest_path(csr_matrix(g.adjacency.astype(np.int8)), unweighted=True, directed=False)
    return int(np.argmin(D.max(axis=1)))


def _downlink_sizes(g: CommGraph, mode: str, learned: UpperWeights | None) -> np.ndarray:
    if mode == "incident":
        return g.degrees.astype(np.int64)
    if mode == "full":
        return np.full(g.n_nodes, g.n_edges, dtype=np.int64)
    if learned is None:
        raise ValueError("the 'support' downlink needs the learned weights")
    A = learned.to_dense() > 0
    return A.sum(axis=1).astype(np.int64)


def centralized_cost(g: CommGraph, n_signals: int, learned_support: DataGraph | UpperWeights | None = None,
                     downlink: str = "incident") -> dict:
    """Messages to gather every signal at the central node and return the results.

    Returns a dict with ``central_up``, ``central_down`` and ``total``.
    """
    if g.n_nodes <= 1:
        return {"central_up": 0, "central_down": 0, "total": 0}
    c = central_node(g)
    hops = hop_distances(g, c)
    if np.any(hops < 0):
        raise ValueError("the centralized cost model needs a connected communication graph")
    learned = learned_support.weights if isinstance(learned_support, DataGraph) else learned_support
    up = int(n_signals) * int(hops.sum())
    down = int(np.dot(hops, _downlink_sizes(g, downlink, learned)))
    return {"central_up": up, "central_down": down, "total": up + down}


def _bfs_parents(g: CommGraph, root: int) -> np.ndarray:
    parent = np.full(g.n_nodes, -1, dtype=np.int64)
    parent[root] = root
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.neighbors[u]:
                if parent[v] < 0:
                    parent[v] = u
                    nxt.append(v)
        frontier = nxt
    return parent


def _charge_central(g, n_signals, learned, downlink, ledger, transport):
    cost = centralized_cost(g, n_signals, learned, downlink)
    ledger.charge("central_up", cost["central_up"])
    ledger.charge("central_down", cost["central_down"])
    if transport is None or g.n_nodes <= 1:
        return
    # replay the gather/scatter hop by hop over a BFS tree
    c = central_node(g)
    parent = _bfs_parents(g, c)
    sizes = _downlink_sizes(g, downlink, learned)
    for i in range(g.n_nodes):
        path = [i]
        while path[-1] != c:
            path.append(int(parent[path[-1]]))
        transport.relay(path, int(n_signals), "central_up")
        transport.relay(path[::-1], int(sizes[i]), "central_down")
