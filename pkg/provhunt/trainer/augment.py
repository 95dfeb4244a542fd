"""
Positive-pair augmentation by edge and node perturbation.
"""
import math

import numpy as np

from ..config import setup_logger
from ..querykit import AttrGraph
from ..vocab import EntityKind, EventDir, ops_for_kind

LOGGER = setup_logger(__name__)

# attempts before an augmentation falls back to the unchanged graph
_MAX_TRIES = 8


def _is_process(g, node):
    return g.abs[node].kind is EntityKind.PROCESS


def _rebuild(g, keep_nodes=None, keep_edges=None):
    """Copy of ``g`` restricted to the given nodes and edges."""
    nodes = range(g.n_nodes) if keep_nodes is None else keep_nodes
    out = AttrGraph(g.label)
    local = {}
    for n in nodes:
        local[n] = out.add_node(g.names[n], g.abs[n])
    edges = g.edges if keep_edges is None else keep_edges
    for e in edges:
        if e.src in local and e.dst in local:
            out.add_edge(local[e.src], local[e.dst], e.op, e.ts)
    return out


def _process_object_edges(g):
    out = []
    for e in g.edges:
        sp, dp = _is_process(g, e.src), _is_process(g, e.dst)
        if sp != dp:
            out.append(e)
    return out


def _random_process_edge(g, rng):
    procs = [n for n in g.nodes() if _is_process(g, n)]
    objs = [n for n in g.nodes() if not _is_process(g, n)]
    if not procs or not objs:
        return None
    p = procs[rng.integers(len(procs))]
    o = objs[rng.integers(len(objs))]
    ops = sorted(ops_for_kind(g.abs[o].kind),
                 key=lambda op: (op.code, op.value))
    op = ops[rng.integers(len(ops))]
    if op.default_dir is EventDir.SBJ_TO_OBJ:
        return (p, o, op)
    return (o, p, op)


def perturb_edges(g, ratio, rng):
    """
    Add or remove ``ceil(ratio * |E|)`` process-file or process-netflow
    edges, each change drawn independently.
    """
    n_changes = int(math.ceil(ratio * g.n_edges))
    removable = _process_object_edges(g)
    removed = set()
    added = []
    for _ in range(n_changes):
        left = [e for e in removable if e not in removed]
        if left and rng.random() < 0.5:
            removed.add(left[rng.integers(len(left))])
            continue
        edge = _random_process_edge(g, rng)
        if edge is not None:
            added.append(edge)
    out = _rebuild(g, keep_edges=[e for e in g.edges if e not in removed])
    for (src, dst, op) in added:
        out.add_edge(src, dst, op)
    return out


def drop_nodes(g, ratio, rng):
    """Remove ``ceil(ratio * |V|)`` file or netflow nodes."""
    objs = [n for n in g.nodes() if not _is_process(g, n)]
    k = min(len(objs), int(math.ceil(ratio * g.n_nodes)))
    if k == 0:
        return g.copy()
    drop = set(rng.choice(objs, size=k, replace=False).tolist())
    return _rebuild(g, keep_nodes=[n for n in g.nodes() if n not in drop])


def graft_nodes(g, donor, ratio, rng):
    """
    Copy ``ceil(ratio * |V|)`` file or netflow nodes of ``donor`` with their
    process edges; each donor process is mapped onto a random process of
    ``g``.
    """
    procs = [n for n in g.nodes() if _is_process(g, n)]
    objs = [n for n in donor.nodes() if not _is_process(donor, n)]
    k = min(len(objs), int(math.ceil(ratio * g.n_nodes)))
    out = g.copy()
    if k == 0 or not procs:
        return out
    picked = rng.choice(objs, size=k, replace=False).tolist()
    local = {n: out.add_node(donor.names[n], donor.abs[n]) for n in picked}
    proc_map = {}
    for e in donor.edges:
        for (mine, other) in ((e.src, e.dst), (e.dst, e.src)):
            if mine in local and _is_process(donor, other):
                if other not in proc_map:
                    proc_map[other] = procs[rng.integers(len(procs))]
        if e.src in local and e.dst in proc_map:
            out.add_edge(local[e.src], proc_map[e.dst], e.op, e.ts)
        elif e.dst in local and e.src in proc_map:
            out.add_edge(proc_map[e.src], local[e.dst], e.op, e.ts)
    return out


def augment(g, ratio, seed=None, donors=None):
    """
    Perturbed copy of ``g`` with analogous behaviour

    Edge and node perturbation are picked with equal probability. Node
    perturbation either drops file or netflow nodes or grafts some from a
    random donor graph. Processes are never removed and an empty result is
    replaced by another draw.

    Parameters
    ----------
    g : AttrGraph

    ratio : float
        Share of edges or nodes changed. 0 returns a copy of ``g``.

    seed : int or numpy.random.Generator, optional

    donors : list of AttrGraph, optional
        Graphs nodes may be grafted from.

    Returns
    -------
    graph : AttrGraph
    """
    if not 0 <= ratio < 1:
        raise ValueError("ratio must be in [0, 1), got {}".format(ratio))
    rng = np.random.default_rng(seed)
    if ratio == 0 or g.n_nodes == 0:
        return g.copy()
    donors = [d for d in (donors or []) if d is not g and d.n_nodes]

    for _ in range(_MAX_TRIES):
        if rng.random() < 0.5:
            out = perturb_edges(g, ratio, rng)
        elif donors and rng.random() < 0.5:
            out = graft_nodes(g, donors[rng.integers(len(donors))], ratio, rng)
        else:
            out = drop_nodes(g, ratio, rng)
        if out.n_nodes > 0:
            return out
    LOGGER.debug("augmentation of {} kept the graph unchanged".format(g.label))
    return g.copy()
