"""
Model inputs derived from an attributed graph.
"""
import collections

import numpy as np

from ..vocab import N_ABS_TYPES, N_OP_CODES

# multi-hot over the op codes plus one direction bit
EDGE_DIM = N_OP_CODES + 1


class GraphFeatures(object):
    """
    Node and message inputs of one graph

    Attributes
    ----------
    x : ndarray, shape (n, 14)
        One-hot abstract type per node.

    src, tgt : ndarray of int, shape (m,)
        Directed message pairs; every neighbouring pair appears once in
        each direction.

    e : ndarray, shape (m, 17)
        Op codes seen on any edge between the pair, in either direction,
        then 1 when some edge flows from ``src`` to ``tgt``.

    degree : ndarray of int, shape (n,)
        Distinct in-neighbours plus distinct out-neighbours.
    """
    __slots__ = ["x", "src", "tgt", "e", "degree", "label"]

    def __init__(self, x, src, tgt, e, degree, label=None):
        self.x = x
        self.src = src
        self.tgt = tgt
        self.e = e
        self.degree = degree
        self.label = label

    @property
    def n_nodes(self):
        return self.x.shape[0]

    @property
    def n_messages(self):
        return self.src.shape[0]

    def gated(self, threshold):
        """Nodes taking part in cross-graph attention."""
        return np.flatnonzero(self.degree > threshold)

    def permute(self, perm):
        """
        Same graph with node ``i`` relabelled ``perm[i]``.
        """
        perm = np.asarray(perm)
        x = np.empty_like(self.x)
        x[perm] = self.x
        degree = np.empty_like(self.degree)
        degree[perm] = self.degree
        return GraphFeatures(x, perm[self.src], perm[self.tgt], self.e.copy(),
                             degree, self.label)


def init_features(g):
    """
    Encode an ``AttrGraph`` for the model

    Parameters
    ----------
    g : AttrGraph

    Returns
    -------
    features : GraphFeatures
    """
    n = g.n_nodes
    x = np.zeros((n, N_ABS_TYPES))
    for (i, abs_type) in enumerate(g.abs):
        x[i, abs_type.code] = 1.0

    ops = collections.OrderedDict()
    flows = set()
    ins = collections.defaultdict(set)
    outs = collections.defaultdict(set)
    for edge in g.edges:
        s, t = edge.src, edge.dst
        if s == t:
            continue
        ops.setdefault((min(s, t), max(s, t)), set()).add(edge.op.code)
        flows.add((s, t))
        outs[s].add(t)
        ins[t].add(s)

    src, tgt, rows = [], [], []
    for ((a, b), codes) in ops.items():
        for (s, t) in ((a, b), (b, a)):
            row = np.zeros(EDGE_DIM)
            row[sorted(codes)] = 1.0
            row[N_OP_CODES] = 1.0 if (s, t) in flows else 0.0
            src.append(s)
            tgt.append(t)
            rows.append(row)

    e = np.array(rows) if rows else np.zeros((0, EDGE_DIM))
    degree = np.array([len(ins[i]) + len(outs[i]) for i in range(n)],
                      dtype=np.int64)
    return GraphFeatures(x, np.array(src, dtype=np.int64),
                         np.array(tgt, dtype=np.int64), e, degree, g.label)
