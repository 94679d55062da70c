"""Synthetic communication graphs, ground-truth data graphs and smooth signals.

All randomness comes from numpy's PCG64 bit generator. A single integer seed
is expanded with ``SeedSequence(seed).spawn(3)`` into independent streams for
the communication graph, the data graph and the signals, so changing the
number of signals never changes the graphs drawn for a seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .graph import CommGraph, DataGraph, UpperWeights, laplacian_from_weights


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    n_nodes: int
    radius: float | None = None  # None -> 2/sqrt(N)
    removal_rate: float = 0.5
    n_signals: int = 1000
    seed: int = 0
    weight_low: float = 0.1
    weight_high: float = 1.0
    signal_noise: float = 0.1
    # scale signals by 1/sqrt(M) so z_ij is a per-signal mean and does not grow with M
    normalize_signals: bool = True
    max_retries: int = 1000

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.radius is None:
            object.__setattr__(self, "radius", 2.0 / math.sqrt(self.n_nodes))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 0 <= self.removal_rate < 1:
            raise ValueError("removal_rate must lie in [0, 1)")
        if self.n_signals < 1:
            raise ValueError("n_signals must be >= 1")
        if not 0 < self.weight_low <= self.weight_high:
            raise ValueError("need 0 < weight_low <= weight_high")
        if self.signal_noise < 0:
            raise ValueError("signal_noise must be >= 0")

    def with_(self, **kw) -> "GenConfig":
        return replace(self, **kw)

    def streams(self) -> tuple[np.random.Generator, ...]:
        seqs = np.random.SeedSequence(self.seed).spawn(3)
        return tuple(np.random.Generator(np.random.PCG64(s)) for s in seqs)


def generate_comm_graph(cfg: GenConfig) -> CommGraph:
    """Uniform positions in the unit square, redrawn until the radius graph is connected."""
    rng = cfg.streams()[0]
    for _ in range(cfg.max_retries):
        pos = rng.random((cfg.n_nodes, 2))
        g = CommGraph.from_positions(pos, cfg.radius)
        if g.is_connected():
            return g
    raise GenerationError(
        f"no connected graph after {cfg.max_retries} draws with N={cfg.n_nodes}, "
        f"radius={cfg.radius:.4g}; the radius is likely too small for this N"
    )


def generate_data_graph(g: CommGraph, cfg: GenConfig) -> DataGraph:
    rng = cfg.streams()[1]
    n_edges = g.n_edges
    n_removed = int(math.floor(cfg.removal_rate * n_edges))
    removed = rng.choice(n_edges, size=n_removed, replace=False)
    keep = np.ones(n_edges, dtype=bool)
    keep[removed] = False
    kept = g.edges[keep]
    weights = rng.uniform(cfg.weight_low, cfg.weight_high, size=len(kept))
    return DataGraph(UpperWeights.from_edges(g.n_nodes, kept, weights), g)


def smooth_signal_factor(L: np.ndarray, noise: float) -> np.ndarray:
    """Matrix F with F F^T = pinv(L) + noise*I, via the eigendecomposition of L."""
    lam, U = np.linalg.eigh(L)
    tol = 1e-10 * max(float(lam.max(initial=0.0)), 1.0)
    inv = np.where(lam > tol, 1.0 / np.where(lam > tol, lam, 1.0), 0.0)
    return U * np.sqrt(inv + noise)


def generate_smooth_signals(d: DataGraph, cfg: GenConfig) -> np.ndarray:
    """Columns i.i.d. N(0, pinv(L) + eps*I) for the ground-truth Laplacian L."""
    rng = cfg.streams()[2]
    F = smooth_signal_factor(laplacian_from_weights(d.weights), cfg.signal_noise)
    X = F @ rng.standard_normal((cfg.n_nodes, cfg.n_signals))
    if cfg.normalize_signals:
        X /= math.sqrt(cfg.n_signals)
    return X


def generate_instance(cfg: GenConfig):
    """Convenience: (CommGraph, DataGraph, X) for one configuration."""
    g = generate_comm_graph(cfg)
    d = generate_data_graph(g, cfg)
    return g, d, generate_smooth_signals(d, cfg)
