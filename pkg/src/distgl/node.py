"""Single-node view of the local problem.

Node ``i`` minimizes, over its weights towards communication neighbours,

    f_i(w) = (1/N) * sum_j w_ij z_ij + max(0, eta - sum_j w_ij)^2

subject to w >= 0, with its own Adam instance. These functions are the
readable reference; the distributed loop runs the same arithmetic for all
nodes at once through :mod:`distgl.kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


class NonFiniteError(FloatingPointError):
    pass


@dataclass(frozen=True)
class NodeState:
    node_id: int
    neighbors: np.ndarray
    weights: np.ndarray
    z: np.ndarray
    eta: float = 1.0
    n_total: int = 1
    adam_m: np.ndarray = None
    adam_v: np.ndarray = None
    step_count: int = 0
    # running beta^t products used for bias correction
    beta1_pow: float = 1.0
    beta2_pow: float = 1.0
    history: tuple = field(default=())

    def __post_init__(self):
        for name in ("neighbors", "weights", "z"):
            object.__setattr__(self, name, np.array(getattr(self, name), copy=True))
        object.__setattr__(self, "weights", self.weights.astype(np.float64))
        object.__setattr__(self, "z", self.z.astype(np.float64))
        if not (self.neighbors.shape == self.weights.shape == self.z.shape):
            raise ValueError("neighbors, weights and z must align")
        if self.node_id in set(self.neighbors.tolist()):
            raise ValueError("a node cannot neighbour itself")
        for name in ("adam_m", "adam_v"):
            val = getattr(self, name)
            val = np.zeros_like(self.weights) if val is None else np.array(val, dtype=np.float64)
            object.__setattr__(self, name, val)
        if not self.eta > 0:
            raise ValueError("eta must be positive")

    @classmethod
    def create(cls, node_id: int, z_table: dict, eta: float = 1.0, n_total: int = 1,
               init_weight: float = 1.0) -> "NodeState":
        nbrs = np.array(sorted(z_table), dtype=np.int64)
        z = np.array([z_table[j] for j in nbrs], dtype=np.float64)
        return cls(node_id, nbrs, np.full(len(nbrs), init_weight), z, eta, n_total)

    @property
    def local_weights(self) -> dict:
        return dict(zip(self.neighbors.tolist(), self.weights.tolist()))

    @property
    def z_local(self) -> dict:
        return dict(zip(self.neighbors.tolist(), self.z.tolist()))

    @property
    def degree(self) -> float:
        return float(self.weights.sum())


def objective_value(weights, z, eta: float, n_total: int) -> float:
    d = float(np.sum(weights))
    pen = max(0.0, eta - d)
    return float(np.dot(weights, z)) / n_total + pen * pen


def local_objective(s: NodeState) -> float:
    return objective_value(s.weights, s.z, s.eta, s.n_total)


def local_gradient(s: NodeState) -> np.ndarray:
    """z_ij/N - 2*max(0, eta - d_i); the hinge contributes 0 at d_i == eta."""
    pen = max(0.0, s.eta - float(np.sum(s.weights)))
    return s.z / s.n_total - 2.0 * pen


def project_local(s: NodeState) -> NodeState:
    w = np.maximum(s.weights, 0.0)
    w[s.neighbors == s.node_id] = 0.0
    return replace(s, weights=w)


def local_step(s: NodeState, lr: float, mode: str = "adam") -> NodeState:
    """One optimizer update followed by :func:`project_local`."""
    if not lr > 0:
        raise ValueError("lr must be positive")
    g = local_gradient(s)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError(f"non-finite gradient at node {s.node_id}")
    if mode == "adam":
        b1p = s.beta1_pow * BETA1
        b2p = s.beta2_pow * BETA2
        m = BETA1 * s.adam_m + (1.0 - BETA1) * g
        v = BETA2 * s.adam_v + (1.0 - BETA2) * g * g
        mh = m / (1.0 - b1p)
        vh = v / (1.0 - b2p)
        w = s.weights - lr * mh / (np.sqrt(vh) + ADAM_EPS)
        s = replace(s, weights=w, adam_m=m, adam_v=v, beta1_pow=b1p, beta2_pow=b2p)
    elif mode == "sgd":
        s = replace(s, weights=s.weights - lr * g)
    else:
        raise ValueError(f"unknown optimizer mode {mode!r}")
    s = project_local(s)
    return replace(s, step_count=s.step_count + 1, history=s.history + (local_objective(s),))


def start_phase(s: NodeState) -> NodeState:
    """Reset the convergence window; optimizer moments are kept."""
    return replace(s, history=(local_objective(s),))


def local_converged(s: NodeState, tol: float = 1e-6, window: int = 10,
                    cap: int = 5000) -> bool:
    h = s.history
    if len(h) - 1 >= cap:
        return True
    if len(h) <= window:
        return False
    old = h[-1 - window]
    return abs(h[-1] - old) <= tol * abs(old)


def solve_local(s: NodeState, lr: float = 0.01, tol: float = 1e-6, window: int = 10,
                cap: int = 5000, mode: str = "adam") -> NodeState:
    s = start_phase(s)
    while not local_converged(s, tol, window, cap):
        s = local_step(s, lr, mode)
    return s
