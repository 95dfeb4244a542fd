"""
Benign training corpus: random BFS subgraphs, augmented positives and
structurally distant negatives.
"""
import collections
import warnings

import numpy as np

from ..config import setup_logger
from ..ppg import Direction
from ..querykit import AttrEdge
from ..sampler import build_attr_graph
from ..util import ProvHuntError
from .augment import augment
from .core import TrainConfig
from .ged import approx_ged, ged_threshold

LOGGER = setup_logger(__name__)

HOPS = (2, 3, 4)


def _bfs(g, seed, hop, limit):
    depth = {seed: 0}
    queue = collections.deque([seed])
    while queue:
        v = queue.popleft()
        if depth[v] == hop:
            continue
        for direction in (Direction.IN, Direction.OUT):
            for nb in g.neighbors(v, direction):
                if nb.node in depth:
                    continue
                depth[nb.node] = depth[v] + 1
                if len(depth) > limit:
                    return None
                queue.append(nb.node)
    return list(depth)


def _induced_edges(g, nodes):
    inside = set(nodes)
    out = []
    for v in nodes:
        for nb in g.neighbors(v, Direction.OUT):
            if nb.node in inside:
                out.append(AttrEdge(v, nb.node, nb.op, nb.ts))
    return out


def sample_benign_corpus(g, cfg=None, rng=None):
    """
    Random BFS subgraphs of an attack-free graph

    Each draw picks a seed node and a hop in {2, 3, 4} uniformly, takes the
    subgraph induced by plain BFS over both edge directions, folds nodes
    with identical names and keeps it when its size is within
    ``[cfg.min_nodes, cfg.max_nodes]``.

    Parameters
    ----------
    g : Ppg or PpgSnapshot

    cfg : TrainConfig, optional

    rng : numpy.random.Generator, optional
        Defaults to one seeded with ``cfg.seed``.

    Returns
    -------
    graphs : list of AttrGraph
        ``cfg.corpus_size`` graphs labelled ``benign-00000`` onwards.

    Raises
    ------
    ProvHuntError
        When ``cfg.max_attempts`` draws per requested graph do not suffice.
    """
    cfg = TrainConfig() if cfg is None else cfg
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    if g.n_nodes == 0:
        raise ProvHuntError("cannot sample a corpus from an empty graph",
                            "train")

    out = []
    budget = cfg.max_attempts * cfg.corpus_size
    attempts = 0
    # raw BFS nodes allowed before identical names are folded
    limit = 4 * cfg.max_nodes
    while len(out) < cfg.corpus_size:
        if attempts >= budget:
            msg = "only {} of {} corpus graphs found after {} draws; the " \
                  "graph has too few regions of {} to {} nodes"
            raise ProvHuntError(msg.format(len(out), cfg.corpus_size, attempts,
                                           cfg.min_nodes, cfg.max_nodes),
                                "train")
        attempts += 1
        seed = int(rng.integers(g.n_nodes))
        hop = HOPS[rng.integers(len(HOPS))]
        nodes = _bfs(g, seed, hop, limit)
        if nodes is None or len(nodes) < cfg.min_nodes:
            continue
        label = "benign-{:05d}".format(len(out))
        graph, _ = build_attr_graph(g, nodes, _induced_edges(g, nodes), label)
        if cfg.min_nodes <= graph.n_nodes <= cfg.max_nodes:
            out.append(graph)

    LOGGER.info("sampled {} corpus graphs in {} draws".format(len(out),
                                                              attempts))
    return out


class TrainCorpus(object):
    """
    Training graphs with their positive and negative partners

    Attributes
    ----------
    graphs : list of AttrGraph

    positives : list of (int, AttrGraph)
        Augmented copy of each graph, keyed by its index.

    negatives : list of (int, int)
        Anchor and partner indices.

    ged : dict
        Approximate distance of every negative pair.

    relaxed : set of (int, int)
        Negative pairs that do not clear the distance threshold.
    """

    def __init__(self, graphs, positives, negatives, ged=None, relaxed=None):
        self.graphs = graphs
        self.positives = positives
        self.negatives = negatives
        self.ged = dict(ged or {})
        self.relaxed = set(relaxed or ())

    def __len__(self):
        return len(self.graphs)

    def negatives_of(self, i):
        return [j for (a, j) in self.negatives if a == i]

    def __repr__(self):
        msg = "TrainCorpus(graphs={}, negatives={}, relaxed={})"
        return msg.format(len(self.graphs), len(self.negatives),
                          len(self.relaxed))


def build_pairs(graphs, cfg=None, rng=None):
    """
    One augmented positive and ``cfg.negatives_per_anchor`` negatives per
    graph

    Negatives are scanned from a random start; a partner qualifies when its
    approximate edit distance exceeds ``min(|Va| + |Ea|, |Vb| + |Eb|)``.
    After ``cfg.max_negative_scan`` candidates without enough qualifying
    partners, the most distant scanned candidates are used and a warning is
    issued.

    Returns
    -------
    corpus : TrainCorpus
    """
    cfg = TrainConfig() if cfg is None else cfg
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    n = len(graphs)
    if n < 2:
        raise ProvHuntError("pair building needs at least two graphs", "train")
    want = min(cfg.negatives_per_anchor, n - 1)

    positives = [(i, augment(g, cfg.perturb_ratio, rng, donors=graphs))
                 for (i, g) in enumerate(graphs)]

    negatives, relaxed, distances = [], set(), {}
    for i in range(n):
        start = int(rng.integers(n))
        scanned = []
        found = []
        for t in range(n):
            j = (start + t) % n
            if j == i:
                continue
            if len(scanned) >= cfg.max_negative_scan:
                break
            key = (min(i, j), max(i, j))
            if key not in distances:
                distances[key] = approx_ged(graphs[i], graphs[j])
            ged = distances[key]
            scanned.append((ged, j))
            if ged > ged_threshold(graphs[i], graphs[j]):
                found.append(j)
                if len(found) == want:
                    break
        if len(found) < want:
            rest = sorted((s for s in scanned if s[1] not in found),
                          key=lambda s: (-s[0], s[1]))
            for (_, j) in rest[:want - len(found)]:
                found.append(j)
                relaxed.add((i, j))
            msg = "no partner of {} clears the distance threshold in {} " \
                  "candidates; using the most distant ones".format(
                      graphs[i].label, len(scanned))
            warnings.warn(msg)
            LOGGER.warning(msg)
        negatives.extend((i, j) for j in found)

    ged = {(i, j): distances[(min(i, j), max(i, j))] for (i, j) in negatives}
    LOGGER.info("built {} positives and {} negatives ({} relaxed)".format(
        len(positives), len(negatives), len(relaxed)))
    return TrainCorpus(list(graphs), positives, negatives, ged, relaxed)


def build_corpus(g, cfg=None):
    """Sample a benign corpus from ``g`` and pair it up."""
    cfg = TrainConfig() if cfg is None else cfg
    rng = np.random.default_rng(cfg.seed)
    return build_pairs(sample_benign_corpus(g, cfg, rng), cfg, rng)
