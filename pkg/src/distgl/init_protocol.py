"""Round-based exchange that gives every node z_ij = ||x_i - x_j||^2 for its neighbours.

Each round, every node still missing some z values looks at the neighbours it
lacks a value for, picks the one with the highest degree (lowest id on ties)
and transmits its own signal there if that neighbour outranks it: strictly
higher degree, or equal degree and higher id. A node never sends to a
neighbour whose signal it already holds. Receivers compute z for every
communication edge between signals they hold, keep what is theirs and send
one scalar to each endpoint that does not have the value yet.

Nodes are assumed to know the neighbour lists of their neighbours (needed to
rank by degree and to know which received pairs are edges); that knowledge is
not charged.
"""
from __future__ import annotations

import numpy as np

from .graph import CommGraph, EdgeDifferences, _as_signals, squared_distance
from .ledger import MessageLedger, Transport


class ProtocolLivelock(RuntimeError):
    pass


def _pick_receiver(i: int, missing: list[int], deg: np.ndarray) -> int:
    # highest degree, lowest id among ties
    return min(missing, key=lambda j: (-deg[j], j))


def _outranks(j: int, i: int, deg: np.ndarray) -> bool:
    return deg[j] > deg[i] or (deg[j] == deg[i] and j > i)


def run_initialization(
    g: CommGraph,
    X,
    ledger: MessageLedger,
    transport: Transport | None = None,
    node_order=None,
) -> EdgeDifferences:
    """Run the protocol to completion and return the per-node z tables.

    ``node_order`` permutes the order in which nodes are visited inside a
    round; the result must not depend on it. The number of rounds is stored
    on the returned object as ``rounds``.
    """
    X = _as_signals(X, g.n_nodes)
    n, m = X.shape
    deg = g.degrees
    adj = g.adjacency
    nbr = [set(a.tolist()) for a in g.neighbors]
    order = list(range(n)) if node_order is None else [int(v) for v in node_order]
    if sorted(order) != list(range(n)):
        raise ValueError("node_order must be a permutation of the node ids")

    out = EdgeDifferences(n)
    held = [{i} for i in range(n)]  # whose signals node i holds
    computed = [set() for _ in range(n)]  # pairs already evaluated at node i
    needed = sum(len(s) for s in nbr)
    have = 0
    rounds = 0

    while have < needed:
        if rounds >= max(n, 1):
            raise ProtocolLivelock(
                f"initialization incomplete after {rounds} rounds "
                f"({needed - have} of {needed} entries missing)"
            )
        rounds += 1

        # sending decisions use round-start state only
        inbox = [[] for _ in range(n)]
        signal_msgs = 0
        for i in order:
            missing = [j for j in nbr[i] if j not in out.tables[i]]
            if not missing:
                continue
            j = _pick_receiver(i, missing, deg)
            if _outranks(j, i, deg) and j not in held[i]:
                inbox[j].append(i)
                signal_msgs += m
                if transport is not None:
                    transport.send(i, j, m, "init_signals")

        deliveries = []  # (endpoint, other, z)
        result_msgs = 0
        for c in order:
            if not inbox[c]:
                continue
            fresh = sorted(inbox[c])
            held[c].update(fresh)
            for a in fresh:
                for b in sorted(held[c]):
                    if b == a or not adj[a, b]:
                        continue
                    lo, hi = (a, b) if a < b else (b, a)
                    if (lo, hi) in computed[c]:
                        continue
                    computed[c].add((lo, hi))
                    z = squared_distance(X[lo], X[hi])
                    for t, o in ((lo, hi), (hi, lo)):
                        if t == c:
                            deliveries.append((t, o, z))
                        elif o not in out.tables[t]:
                            deliveries.append((t, o, z))
                            result_msgs += 1
                            if transport is not None:
                                transport.send(c, t, 1, "init_results")

        progressed = False
        for t, o, z in deliveries:
            if o not in out.tables[t]:
                out.tables[t][o] = z
                have += 1
                progressed = True
        ledger.charge("init_signals", signal_msgs)
        ledger.charge("init_results", result_msgs)
        if not progressed:
            raise ProtocolLivelock(f"no progress in round {rounds}")

    out.rounds = rounds
    return out


def naive_initialization_cost(g: CommGraph, n_signals: int) -> int:
    """Every node ships its full signal across each incident edge."""
    return 2 * g.n_edges * int(n_signals)
