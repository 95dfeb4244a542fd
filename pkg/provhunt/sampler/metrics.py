"""
Coverage and noise of sampled graphs against query graphs.

Nodes are identified by (normalized name, abstract type) and edges by
their two node identities plus the canonical op.
"""
import numpy as np

from ..querykit import to_attr_graph


def _node_keys(g):
    return {g.key(n) for n in g.nodes()}


def _edge_keys(g):
    return {(g.key(e.src), g.key(e.dst), e.op.canonical) for e in g.edges}


def _ratio(num, den, empty):
    return num / den if den else empty


def coverage_noise(tg, qg):
    """
    Coverage (CR) and noise (NR) rates of a sampled graph

    Parameters
    ----------
    tg : ThreatGraph or AttrGraph

    qg : AttrGraph
        Query graph; must have at least one node.

    Returns
    -------
    rates : dict
        ``node_cr``, ``edge_cr``, ``node_nr`` and ``edge_nr``. A query
        without edges counts as fully covered, an empty sample as noise
        free.
    """
    sg = to_attr_graph(tg)
    qg = to_attr_graph(qg)
    if qg.n_nodes == 0:
        raise ValueError("coverage is undefined for an empty query graph")

    sn, qn = _node_keys(sg), _node_keys(qg)
    se, qe = _edge_keys(sg), _edge_keys(qg)
    return {
        "node_cr": _ratio(len(sn & qn), len(qn), 1.0),
        "edge_cr": _ratio(len(se & qe), len(qe), 1.0),
        "node_nr": _ratio(len(sn - qn), len(sn), 0.0),
        "edge_nr": _ratio(len(se - qe), len(se), 0.0),
    }


def coverage_noise_summary(pairs):
    """
    Average the rates over ``(sampled graph, query graph)`` pairs

    Returns
    -------
    summary : dict
        Mean of every rate plus ``n``, the number of pairs.
    """
    rows = [coverage_noise(tg, qg) for (tg, qg) in pairs]
    if not rows:
        raise ValueError("coverage_noise_summary needs at least one pair")
    out = {key: float(np.mean([r[key] for r in rows])) for key in rows[0]}
    out["n"] = len(rows)
    return out
