"""Graph data types, upper-triangular weight indexing and the Laplacian operator.

Pairs ``(i, j)`` with ``i < j`` are flattened row-major over the strict upper
triangle::

    k = i*N - i*(i+1)//2 + (j - i - 1)

so for N=4 the order is (0,1), (0,2), (0,3), (1,2), (1,3), (2,3).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def n_pairs(n_nodes: int) -> int:
    return n_nodes * (n_nodes - 1) // 2


def pair_index(i, j, n_nodes: int):
    """Flat index of the unordered pair {i, j}; works on scalars and arrays."""
    i, j = np.minimum(i, j), np.maximum(i, j)
    return i * n_nodes - i * (i + 1) // 2 + (j - i - 1)


def index_pair(k, n_nodes: int):
    """Inverse of :func:`pair_index`, returning ``(i, j)`` with ``i < j``."""
    k = np.asarray(k, dtype=np.int64)
    # number of pairs starting at rows < i is i*N - i(i+1)/2; solve for i
    b = 2 * n_nodes - 1
    i = np.floor((b - np.sqrt(b * b - 8.0 * k)) / 2.0).astype(np.int64)
    # guard the float sqrt at row boundaries
    start = i * n_nodes - i * (i + 1) // 2
    i = np.where(start > k, i - 1, i)
    start = i * n_nodes - i * (i + 1) // 2
    nxt = (i + 1) * n_nodes - (i + 1) * (i + 2) // 2
    i = np.where(k >= nxt, i + 1, i)
    start = i * n_nodes - i * (i + 1) // 2
    j = k - start + i + 1
    if j.ndim == 0:
        return int(i), int(j)
    return i, j


@dataclass(frozen=True)
class CommGraph:
    """Unweighted communication topology over nodes placed in the unit square."""

    positions: np.ndarray
    radius: float
    adjacency: np.ndarray
    neighbors: tuple = field(init=False, repr=False)
    edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.shape[0] != adj.shape[1] or not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be square and symmetric")
        if np.any(np.diag(adj)):
            raise ValueError("adjacency must have an empty diagonal")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(
            self, "neighbors", tuple(np.flatnonzero(row) for row in adj)
        )
        iu, ju = np.nonzero(np.triu(adj, 1))
        object.__setattr__(self, "edges", np.column_stack([iu, ju]).astype(np.int64))

    @classmethod
    def from_positions(cls, positions, radius: float) -> "CommGraph":
        pos = np.asarray(positions, dtype=np.float64)
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        adj = dist <= radius
        np.fill_diagonal(adj, False)
        return cls(pos, float(radius), adj)

    @classmethod
    def from_edges(cls, n_nodes: int, edges, positions=None, radius=float("nan")):
        """Build from an explicit edge list (handy for hand-made topologies)."""
        adj = np.zeros((n_nodes, n_nodes), dtype=bool)
        for i, j in edges:
            adj[i, j] = adj[j, i] = True
        if positions is None:
            positions = np.full((n_nodes, 2), np.nan)
        return cls(np.asarray(positions, dtype=np.float64), float(radius), adj)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def mean_degree(self) -> float:
        return float(self.degrees.mean()) if self.n_nodes else 0.0

    @property
    def edge_index(self) -> np.ndarray:
        """Flat upper-triangular index of every edge, in ``edges`` order."""
        return pair_index(self.edges[:, 0], self.edges[:, 1], self.n_nodes)

    def is_connected(self) -> bool:
        return bool(np.all(hop_distances(self, 0) >= 0)) if self.n_nodes else True


def hop_distances(g: CommGraph, source: int) -> np.ndarray:
    """BFS hop count from ``source``; -1 marks unreachable nodes."""
    dist = np.full(g.n_nodes, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.neighbors[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


@dataclass
class UpperWeights:
    """Strict upper triangle of a symmetric, zero-diagonal, nonnegative weight matrix."""

    values: np.ndarray
    n_nodes: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (n_pairs(self.n_nodes),):
            raise ValueError(
                f"expected {n_pairs(self.n_nodes)} upper entries for N={self.n_nodes}, "
                f"got shape {self.values.shape}"
            )
        if np.any(self.values < 0):
            raise ValueError("weights must be nonnegative")

    @classmethod
    def zeros(cls, n_nodes: int) -> "UpperWeights":
        return cls(np.zeros(n_pairs(n_nodes)), n_nodes)

    @classmethod
    def from_edges(cls, n_nodes: int, edges, weights) -> "UpperWeights":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        values = np.zeros(n_pairs(n_nodes))
        values[pair_index(edges[:, 0], edges[:, 1], n_nodes)] = weights
        return cls(values, n_nodes)

    @classmethod
    def from_dense(cls, W) -> "UpperWeights":
        W = np.asarray(W, dtype=np.float64)
        iu = np.triu_indices(W.shape[0], 1)
        return cls(W[iu], W.shape[0])

    def to_dense(self) -> np.ndarray:
        W = np.zeros((self.n_nodes, self.n_nodes))
        iu = np.triu_indices(self.n_nodes, 1)
        W[iu] = self.values
        return W + W.T

    def on_edges(self, edges) -> np.ndarray:
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        return self.values[pair_index(edges[:, 0], edges[:, 1], self.n_nodes)]

    def support(self) -> np.ndarray:
        """Nonzero pairs as an (k, 2) edge array."""
        i, j = index_pair(np.flatnonzero(self.values), self.n_nodes)
        return np.column_stack([np.atleast_1d(i), np.atleast_1d(j)]).astype(np.int64)


@dataclass
class DataGraph:
    weights: UpperWeights
    source: CommGraph

    def __post_init__(self):
        off = np.ones(n_pairs(self.source.n_nodes), dtype=bool)
        off[self.source.edge_index] = False
        if np.any(self.weights.values[off] != 0):
            raise ValueError("data graph has weight outside the communication edges")


def laplacian_from_weights(w: UpperWeights) -> np.ndarray:
    W = w.to_dense()
    return np.diag(W.sum(axis=1)) - W


def _as_signals(X, n_nodes: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != n_nodes:
        raise ValueError(f"signal matrix must have {n_nodes} rows, got shape {X.shape}")
    return X


def smoothness(w: UpperWeights, X) -> float:
    """Laplacian quadratic form, summed pairwise as sum_{i<j} w_ij ||x_i - x_j||^2."""
    X = _as_signals(X, w.n_nodes)
    k = np.flatnonzero(w.values)
    if k.size == 0:
        return 0.0
    i, j = index_pair(k, w.n_nodes)
    d = X[np.atleast_1d(i)] - X[np.atleast_1d(j)]
    return float(np.dot(w.values[k], np.einsum("ij,ij->i", d, d)))


def squared_distance(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b||^2 with a fixed evaluation order (callers pass lower id first)."""
    d = a - b
    return float(np.dot(d, d))


class EdgeDifferences:
    """Per-node tables ``j -> z_ij`` over communication neighbours."""

    def __init__(self, n_nodes: int):
        self.tables: list[dict[int, float]] = [dict() for _ in range(n_nodes)]
        self.rounds: int | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.tables)

    def __getitem__(self, i: int) -> dict:
        return self.tables[i]

    def get(self, i: int, j: int) -> float:
        return self.tables[i][j]

    def is_complete(self, g: CommGraph) -> bool:
        return all(
            set(self.tables[i]) == set(g.neighbors[i].tolist()) for i in range(g.n_nodes)
        )

    def edge_values(self, edges) -> np.ndarray:
        """z values aligned with an (E, 2) edge array; read from the lower endpoint."""
        return np.array([self.tables[int(i)][int(j)] for i, j in edges], dtype=np.float64)

    def __eq__(self, other) -> bool:
        return isinstance(other, EdgeDifferences) and self.tables == other.tables

    def __repr__(self) -> str:
        n = sum(len(t) for t in self.tables)
        return f"EdgeDifferences(n_nodes={self.n_nodes}, entries={n})"


def edge_differences(X, g: CommGraph) -> EdgeDifferences:
    """Centralized reference: z_ij for every communication edge, both endpoints."""
    X = _as_signals(X, g.n_nodes)
    out = EdgeDifferences(g.n_nodes)
    for i, j in g.edges:
        i, j = int(i), int(j)
        z = squared_distance(X[i], X[j])
        out.tables[i][j] = z
        out.tables[j][i] = z
    return out
