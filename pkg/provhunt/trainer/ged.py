"""
Graph edit distance between attributed graphs.

Edit costs: substituting a node costs 0 when the abstract types agree and 1
otherwise, inserting or deleting a node costs 1, and every labelled edge
``(src, dst, op)`` left unmatched by the node mapping costs 1 on either
side (edges of deleted nodes included).
"""
import collections

import numpy as np
from scipy.optimize import linear_sum_assignment

_BLOCKED = 1e9
# favours keeping node i on node i when costs tie
_TIE_BREAK = 1e-9


def _edge_set(g):
    return {(e.src, e.dst, e.op) for e in g.edges}


def _labels(g):
    out = [collections.Counter() for _ in range(g.n_nodes)]
    for e in g.edges:
        out[e.src][(e.op, "out")] += 1
        out[e.dst][(e.op, "in")] += 1
    return out


def mapping_cost(a, b, mapping):
    """
    Cost of the edit path induced by a node mapping

    Parameters
    ----------
    a, b : AttrGraph

    mapping : sequence
        ``mapping[i]`` is the node of ``b`` that node ``i`` of ``a`` becomes,
        or None when it is deleted. Must be injective.

    Returns
    -------
    cost : int
    """
    cost = 0
    used = set()
    for (i, j) in enumerate(mapping):
        if j is None:
            cost += 1
            continue
        if j in used:
            raise ValueError("mapping is not injective at node {}".format(j))
        used.add(j)
        cost += 0 if a.abs[i] is b.abs[j] else 1
    cost += b.n_nodes - len(used)

    eb = _edge_set(b)
    ea = _edge_set(a)
    kept = {(mapping[s], mapping[t], op) for (s, t, op) in ea
            if mapping[s] is not None and mapping[t] is not None}
    common = len(kept & eb)
    return cost + (len(ea) - common) + (len(eb) - common)


def cost_matrix(a, b):
    """
    Square assignment matrix over substitutions, deletions and insertions

    Rows are the nodes of ``a`` followed by one insertion slot per node of
    ``b``; columns are the nodes of ``b`` followed by one deletion slot per
    node of ``a``. Each entry adds half the cost of the incident edges the
    choice leaves unmatched.
    """
    n, m = a.n_nodes, b.n_nodes
    la, lb = _labels(a), _labels(b)
    c = np.zeros((n + m, n + m))
    c[:n, m:] = _BLOCKED
    c[n:, :m] = _BLOCKED
    for i in range(n):
        size_i = sum(la[i].values())
        for j in range(m):
            size_j = sum(lb[j].values())
            common = sum((la[i] & lb[j]).values())
            c[i, j] = (0.0 if a.abs[i] is b.abs[j] else 1.0) + \
                (size_i + size_j - 2 * common) / 2.0
        c[i, m + i] = 1.0 + size_i / 2.0
    for j in range(m):
        c[n + j, j] = 1.0 + sum(lb[j].values()) / 2.0
    k = min(n, m)
    c[np.arange(k), np.arange(k)] -= _TIE_BREAK
    return c


def approx_ged(a, b):
    """
    Bipartite approximation of the graph edit distance

    The node assignment minimizing ``cost_matrix(a, b)`` is solved exactly
    and the cost of the edit path it induces is returned, so the result is
    never below the true distance.

    Parameters
    ----------
    a, b : AttrGraph
        Both non-empty.

    Returns
    -------
    ged : float
    """
    if a.n_nodes == 0 or b.n_nodes == 0:
        raise ValueError("approx_ged needs non-empty graphs")
    m = b.n_nodes
    rows, cols = linear_sum_assignment(cost_matrix(a, b))
    mapping = [None] * a.n_nodes
    for (r, col) in zip(rows, cols):
        if r < a.n_nodes and col < m:
            mapping[r] = int(col)
    return float(mapping_cost(a, b, mapping))


def ged_threshold(a, b):
    """Distance a pair must exceed to count as structurally different."""
    return min(a.n_nodes + a.n_edges, b.n_nodes + b.n_edges)


def is_negative_pair(a, b, ged=None):
    ged = approx_ged(a, b) if ged is None else ged
    return ged > ged_threshold(a, b)
