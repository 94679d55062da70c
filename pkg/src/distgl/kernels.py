"""Hot loop of the distributed algorithm: every node runs its local optimizer to convergence.

State is packed CSR-style over directed half-edges: entries
``indptr[i]:indptr[i+1]`` belong to node ``i``. Both backends update
``w, m, v, b1p, b2p, steps`` in place and return the number of steps each
node took. They use the same summation order (sequential per node), so on
IEEE hardware they agree to the last bit.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import default_backend, njit
from .node import ADAM_EPS, BETA1, BETA2, NonFiniteError


@njit(cache=True)
def _local_phase_numba(indptr, z, w, m, v, b1p, b2p, steps, eta, inv_n, lr, beta1, beta2,
                       eps, tol, window, cap, adam):
    n = indptr.size - 1
    used = np.zeros(n, dtype=np.int64)
    hist = np.empty(window + 1)
    c1 = 1.0 - beta1
    c2 = 1.0 - beta2
    for i in range(n):
        lo = indptr[i]
        hi = indptr[i + 1]
        if hi == lo:
            continue
        d = 0.0
        acc = 0.0
        for p in range(lo, hi):
            d += w[p]
            acc += w[p] * z[p]
        pen = eta - d
        if pen < 0.0:
            pen = 0.0
        hist[0] = acc * inv_n + pen * pen
        k = 0
        while k < cap:
            if adam:
                b1p[i] *= beta1
                b2p[i] *= beta2
            for p in range(lo, hi):
                g = z[p] * inv_n - 2.0 * pen
                if not math.isfinite(g):
                    used[i] = -1
                    return used
                if adam:
                    m[p] = beta1 * m[p] + c1 * g
                    v[p] = beta2 * v[p] + c2 * (g * g)
                    mh = m[p] / (1.0 - b1p[i])
                    vh = v[p] / (1.0 - b2p[i])
                    w[p] = w[p] - lr * mh / (math.sqrt(vh) + eps)
                else:
                    w[p] = w[p] - lr * g
                if not w[p] > 0.0:
                    w[p] = 0.0
            k += 1
            steps[i] += 1
            d = 0.0
            acc = 0.0
            for p in range(lo, hi):
                d += w[p]
                acc += w[p] * z[p]
            pen = eta - d
            if pen < 0.0:
                pen = 0.0
            f = acc * inv_n + pen * pen
            hist[k % (window + 1)] = f
            if k >= window:
                old = hist[(k - window) % (window + 1)]
                if abs(f - old) <= tol * abs(old):
                    break
        used[i] = k
    return used


def _local_phase_numpy(indptr, z, w, m, v, b1p, b2p, steps, eta, inv_n, lr, beta1, beta2,
                       eps, tol, window, cap, adam):
    n = indptr.size - 1
    counts = np.diff(indptr)
    owner = np.repeat(np.arange(n), counts)
    used = np.zeros(n, dtype=np.int64)
    c1 = 1.0 - beta1
    c2 = 1.0 - beta2

    def node_sums():
        # bincount accumulates in input order, matching the sequential loop
        d = np.bincount(owner, weights=w, minlength=n)
        acc = np.bincount(owner, weights=w * z, minlength=n)
        pen = np.maximum(eta - d, 0.0)
        return pen, acc * inv_n + pen * pen

    pen, f = node_sums()
    hist = np.empty((window + 1, n))
    hist[0] = f
    active = counts > 0
    k = 0
    while k < cap and active.any():
        sel = active[owner]
        if adam:
            b1p[active] *= beta1
            b2p[active] *= beta2
        g = z[sel] * inv_n - 2.0 * pen[owner[sel]]
        if not np.all(np.isfinite(g)):
            bad = owner[sel][~np.isfinite(g)][0]
            used[bad] = -1
            return used
        if adam:
            m[sel] = beta1 * m[sel] + c1 * g
            v[sel] = beta2 * v[sel] + c2 * (g * g)
            mh = m[sel] / (1.0 - b1p[owner[sel]])
            vh = v[sel] / (1.0 - b2p[owner[sel]])
            ws = w[sel] - lr * mh / (np.sqrt(vh) + eps)
        else:
            ws = w[sel] - lr * g
        ws[~(ws > 0.0)] = 0.0
        w[sel] = ws
        k += 1
        steps[active] += 1
        used[active] = k
        pen, f = node_sums()
        hist[k % (window + 1), active] = f[active]
        if k >= window:
            old = hist[(k - window) % (window + 1)]
            done = active & (np.abs(f - old) <= tol * np.abs(old))
            active &= ~done
    return used


def local_phase(indptr, z, w, m, v, b1p, b2p, steps, *, eta: float, inv_n: float, lr: float,
                tol: float, window: int, cap: int, adam: bool = True, backend: str | None = None):
    """Run every node's local optimizer until its own convergence test fires."""
    backend = backend or default_backend()
    fn = {"numba": _local_phase_numba, "numpy": _local_phase_numpy}[backend]
    used = fn(indptr, z, w, m, v, b1p, b2p, steps, float(eta), float(inv_n), float(lr),
              BETA1, BETA2, ADAM_EPS, float(tol), int(window), int(cap), bool(adam))
    if np.any(used < 0):
        node = int(np.flatnonzero(used < 0)[0])
        raise NonFiniteError(f"non-finite gradient at node {node}")
    return used
