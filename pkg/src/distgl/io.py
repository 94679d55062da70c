"""On-disk layout for a generated instance (see README, "File formats").

A directory holds:

``nodes.csv``        ``node,x,y``
``comm_edges.csv``   ``i,j`` with i < j, lexicographic order
``data_edges.csv``   ``i,j,weight`` for ground-truth edges with weight > 0
``signals.csv``      ``node,s0,...,s{M-1}``
``meta.json``        generator config, N, M, radius, RNG description

Floats are written with ``repr`` so they read back bit-exactly.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .graph import CommGraph, DataGraph, UpperWeights

RNG_NOTE = "numpy PCG64, streams from SeedSequence(seed).spawn(3): comm graph, data graph, signals"


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_rows(path: Path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, list(r)


def write_instance(out_dir, g: CommGraph, d: DataGraph, X: np.ndarray, cfg=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "nodes.csv", ["node", "x", "y"],
                ([i, repr(float(x)), repr(float(y))] for i, (x, y) in enumerate(g.positions)))
    _write_rows(out / "comm_edges.csv", ["i", "j"], ([int(i), int(j)] for i, j in g.edges))
    sup = d.weights.support()
    wts = d.weights.on_edges(sup)
    _write_rows(out / "data_edges.csv", ["i", "j", "weight"],
                ([int(i), int(j), repr(float(x))] for (i, j), x in zip(sup, wts)))
    M = X.shape[1]
    _write_rows(out / "signals.csv", ["node"] + [f"s{k}" for k in range(M)],
                ([i] + [repr(float(x)) for x in row] for i, row in enumerate(X)))
    meta = {
        "n_nodes": g.n_nodes,
        "n_signals": M,
        "radius": g.radius,
        "n_comm_edges": g.n_edges,
        "n_data_edges": int(len(sup)),
        "rng": RNG_NOTE,
        "config": asdict(cfg) if cfg is not None else None,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return out


def read_instance(in_dir):
    """Inverse of :func:`write_instance`; returns ``(CommGraph, DataGraph, X, meta)``."""
    src = Path(in_dir)
    meta = json.loads((src / "meta.json").read_text())
    n = meta["n_nodes"]
    _, rows = _read_rows(src / "nodes.csv")
    pos = np.array([[float(r[1]), float(r[2])] for r in rows]).reshape(n, 2)
    _, rows = _read_rows(src / "comm_edges.csv")
    g = CommGraph.from_edges(n, [(int(r[0]), int(r[1])) for r in rows], pos, meta["radius"])
    _, rows = _read_rows(src / "data_edges.csv")
    edges = np.array([[int(r[0]), int(r[1])] for r in rows], dtype=np.int64).reshape(-1, 2)
    weights = np.array([float(r[2]) for r in rows])
    d = DataGraph(UpperWeights.from_edges(n, edges, weights), g)
    _, rows = _read_rows(src / "signals.csv")
    X = np.array([[float(x) for x in r[1:]] for r in rows]).reshape(n, meta["n_signals"])
    return g, d, X, meta
