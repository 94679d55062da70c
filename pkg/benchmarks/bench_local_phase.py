"""Time one distributed local phase with the numba kernel and the numpy fallback.

    python3 benchmarks/bench_local_phase.py --nodes 200 --factor 3.0 --repeat 3
"""
import argparse
import math
import time

import numpy as np

from distgl import _accel, kernels
from distgl.graph import edge_differences
from distgl.loop import GlobalRunConfig, _Packed
from distgl.synth import GenConfig, generate_instance


def packed_state(n, factor, m, seed):
    g, _, X = generate_instance(GenConfig(n, radius=factor / math.sqrt(n), n_signals=m, seed=seed))
    P = _Packed(g, edge_differences(X, g))
    return g, P


def time_backend(P, backend, cfg, repeat):
    best = math.inf
    for _ in range(repeat):
        E, n = len(P.nbr), P.n
        w, m, v = np.ones(E), np.zeros(E), np.zeros(E)
        b1p, b2p, steps = np.ones(n), np.ones(n), np.zeros(n, np.int64)
        t0 = time.perf_counter()
        kernels.local_phase(P.indptr, P.z / n, w, m, v, b1p, b2p, steps, eta=cfg.eta, inv_n=1.0, lr=cfg.lr,
                            tol=cfg.local_tol, window=cfg.local_window, cap=cfg.local_step_cap,
                            backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, w, int(steps.sum())


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--nodes", type=int, default=200)
    ap.add_argument("--factor", type=float, default=3.0)
    ap.add_argument("--signals", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    g, P = packed_state(args.nodes, args.factor, args.signals, args.seed)
    cfg = GlobalRunConfig()
    print(f"N={g.n_nodes} |E|={g.n_edges} mean degree {g.mean_degree:.1f}")
    results = {}
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    if _accel.HAVE_NUMBA:
        time_backend(P, "numba", cfg, 1)  # compile outside the timing
    for b in backends:
        t, w, steps = time_backend(P, b, cfg, args.repeat)
        results[b] = (t, w)
        print(f"{b:>6}: {t * 1e3:9.1f} ms  ({steps} node steps)")
    if len(results) == 2:
        same = np.array_equal(results["numpy"][1], results["numba"][1])
        print(f"speedup {results['numpy'][0] / results['numba'][0]:.1f}x, identical weights: {same}")
    else:
        print("numba not installed; install the 'fast' extra to compare")


if __name__ == "__main__":
    main()
