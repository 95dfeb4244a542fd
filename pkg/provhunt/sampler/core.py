"""
Adaptive breadth-first threat graph sampling over a packed graph.
"""
import collections
import warnings

from ..config import options, setup_logger
from ..ppg import Direction, Order
from ..querykit import AttrGraph
from ..util import ProvHuntError
from ..vocab import EdgeOp, normalize_name
from .rules import RULE_SETS, rule_allows

LOGGER = setup_logger(__name__)

Candidate = collections.namedtuple("Candidate", ["node", "fork", "edges"])

# one admitted edge: flow source, flow target, op, ts, rule id
SampledEdge = collections.namedtuple(
    "SampledEdge", ["src", "dst", "op", "ts", "rule"]
)


class SamplingConfig(object):
    """
    Parameters
    ----------
    k : int, optional
        Hop limit for non-fork edges. Defaults to ``sampler.k``.

    rules : {"table3", "all"}, optional
        Defaults to ``sampler.rules``.

    max_nodes : int, optional
        Nodes per threat graph before it is truncated. Defaults to
        ``sampler.max_nodes``.

    poi_reset : bool
        Reaching another POI resets the depth to zero.

    merge : bool
        Merge graphs sharing a node.
    """
    __slots__ = ["k", "rules", "max_nodes", "poi_reset", "merge"]

    def __init__(self, k=None, rules=None, max_nodes=None, poi_reset=True,
                 merge=True):
        self.k = options["sampler.k"] if k is None else int(k)
        self.rules = options["sampler.rules"] if rules is None else rules
        self.max_nodes = options["sampler.max_nodes"] \
            if max_nodes is None else int(max_nodes)
        self.poi_reset = bool(poi_reset)
        self.merge = bool(merge)
        if self.k < 1:
            raise ValueError("k must be at least 1, got {}".format(self.k))
        if self.max_nodes < 1:
            msg = "max_nodes must be at least 1, got {}"
            raise ValueError(msg.format(self.max_nodes))
        if self.rules not in RULE_SETS:
            msg = "Unknown rule set {}. Known rule sets are {}"
            raise ValueError(msg.format(self.rules, RULE_SETS))

    @classmethod
    def from_options(cls, opts=None, **kwargs):
        opts = options if opts is None else opts
        return cls(k=opts["sampler.k"], rules=opts["sampler.rules"],
                   max_nodes=opts["sampler.max_nodes"], **kwargs)

    def as_dict(self):
        return {s: getattr(self, s) for s in self.__slots__}

    def __repr__(self):
        return "SamplingConfig({})".format(self.as_dict())


class ThreatGraph(object):
    """
    A sampled subgraph with its provenance

    Attributes
    ----------
    graph : AttrGraph

    sources : list of tuple of int
        Packed-graph nodes folded into each graph node.

    seeds : list of int
        The POIs the graph grew from.

    truncated : bool
        Growth stopped at ``max_nodes``.

    rule_hits : dict
        Number of sampled edges admitted by each rule.
    """

    def __init__(self, ident, graph, sources, seeds, truncated=False,
                 rule_hits=None):
        self.id = ident
        self.graph = graph
        self.sources = sources
        self.seeds = list(seeds)
        self.truncated = truncated
        self.rule_hits = dict(rule_hits or {})

    @property
    def n_nodes(self):
        return self.graph.n_nodes

    @property
    def n_edges(self):
        return self.graph.n_edges

    def ppg_nodes(self):
        return sorted(n for group in self.sources for n in group)

    def provenance(self):
        return {
            "id": self.id,
            "seeds": self.seeds,
            "ppg_nodes": [list(group) for group in self.sources],
            "truncated": self.truncated,
            "rule_hits": dict(sorted(self.rule_hits.items())),
        }

    def __repr__(self):
        msg = "ThreatGraph({}, nodes={}, edges={}, seeds={})"
        return msg.format(self.id, self.n_nodes, self.n_edges, self.seeds)


def candidates(g, v, rule_set="table3", cache=None):
    """
    Rule-admitted neighbours of ``v``

    Incoming edges are enumerated newest first, then outgoing edges oldest
    first. Neighbours are reported once, in order of first appearance, with
    every admitted edge and whether any of them is a fork.

    Returns
    -------
    candidates : list of Candidate
    """
    if cache is not None and v in cache:
        return cache[v]

    view = g.node_view(v)
    groups = collections.OrderedDict()
    views = {}
    walks = [(Direction.IN, Order.TIME_DESC), (Direction.OUT, Order.TIME_ASC)]
    for (direction, order) in walks:
        for nb in g.neighbors(v, direction, order):
            u = nb.node
            if u not in views:
                views[u] = g.node_view(u)
            rule = rule_allows(view, views[u], nb.op, rule_set)
            if rule is None:
                continue
            if direction is Direction.IN:
                edge = SampledEdge(u, v, nb.op, nb.ts, rule)
            else:
                edge = SampledEdge(v, u, nb.op, nb.ts, rule)
            groups.setdefault(u, []).append(edge)

    out = [Candidate(u, any(e.op is EdgeOp.FORK for e in edges), edges)
           for (u, edges) in groups.items()]
    if cache is not None:
        cache[v] = out
    return out


def _expand(g, poi, pois, cfg, cache):
    visited = {poi: None}
    edges = []
    queue = collections.deque([(poi, 0)])
    truncated = False
    while queue:
        v, depth = queue.popleft()
        for cand in candidates(g, v, cfg.rules, cache):
            u = cand.node
            if u in visited:
                edges.extend(cand.edges)
                continue
            if len(visited) >= cfg.max_nodes:
                truncated = True
                continue
            visited[u] = None
            edges.extend(cand.edges)
            if cfg.poi_reset and u in pois:
                queue.append((u, 0))
            elif cand.fork:
                queue.append((u, depth))
            elif depth < cfg.k - 1:
                queue.append((u, depth + 1))
    return list(visited), edges, truncated


class _UnionFind(object):
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _merge_overlapping(parts):
    uf = _UnionFind(len(parts))
    owner = {}
    for (i, (nodes, _, _, _)) in enumerate(parts):
        for n in nodes:
            if n in owner:
                uf.union(owner[n], i)
            else:
                owner[n] = i

    merged = collections.OrderedDict()
    for (i, part) in enumerate(parts):
        merged.setdefault(uf.find(i), []).append(part)

    out = []
    for group in merged.values():
        nodes = collections.OrderedDict()
        edges, seeds, truncated = [], [], False
        for (n, e, s, t) in group:
            for x in n:
                nodes[x] = None
            edges.extend(e)
            seeds.extend(s)
            truncated |= t
        out.append((list(nodes), edges, seeds, truncated))
    return out


def _unique(edges):
    seen = set()
    out = []
    for e in edges:
        key = (e.src, e.dst, e.op, e.ts)
        if key not in seen:
            seen.add(key)
            out.append(e)
    return out


def build_attr_graph(g, nodes, edges, label=None, merge_identical=True):
    """
    Turn sampled packed-graph nodes and edges into an attributed graph

    Parameters
    ----------
    g : Ppg or PpgSnapshot

    nodes : list of int
        Packed-graph nodes in graph order.

    edges : iterable
        Items with ``src, dst, op, ts`` over packed-graph nodes; edges with
        an endpoint outside ``nodes`` are dropped.

    merge_identical : bool
        Fold nodes sharing normalized name and abstract type.

    Returns
    -------
    graph : AttrGraph

    sources : list of tuple of int
        Packed-graph nodes behind each graph node.
    """
    graph = AttrGraph(label)
    local = {}
    sources = []
    by_key = {}
    for n in nodes:
        if n in local:
            continue
        name, abs_type = g.name(n), g.abs_type(n)
        key = (normalize_name(abs_type.kind, name), abs_type)
        if merge_identical:
            if key in by_key:
                i = by_key[key]
                local[n] = i
                sources[i].append(n)
                continue
        i = graph.add_node(name, abs_type)
        local[n] = i
        sources.append([n])
        if merge_identical:
            by_key[key] = i

    for e in edges:
        if e.src in local and e.dst in local:
            a, b = local[e.src], local[e.dst]
            if a != b:
                graph.add_edge(a, b, e.op, e.ts)
    return graph, [tuple(s) for s in sources]


def sample(g, pois, cfg=None):
    """
    Grow threat graphs around points of interest

    Parameters
    ----------
    g : Ppg or PpgSnapshot

    pois : iterable of int
        Seed nodes of ``g``.

    cfg : SamplingConfig, optional

    Returns
    -------
    graphs : list of ThreatGraph
        With ``cfg.merge`` every seed lands in exactly one graph.
    """
    cfg = SamplingConfig() if cfg is None else cfg
    seeds = []
    for p in pois:
        if not g.has_node(p):
            raise ProvHuntError("unknown POI node {!r}".format(p), "sample")
        if p not in seeds:
            seeds.append(p)
    if not seeds:
        raise ValueError("sample needs at least one POI")

    poi_set = frozenset(seeds)
    cache = {}
    parts = []
    for p in seeds:
        nodes, edges, truncated = _expand(g, p, poi_set, cfg, cache)
        parts.append((nodes, edges, [p], truncated))

    if cfg.merge:
        parts = _merge_overlapping(parts)

    out = []
    for (i, (nodes, edges, part_seeds, truncated)) in enumerate(parts):
        ident = "tg-{:04d}".format(i)
        edges = _unique(edges)
        graph, sources = build_attr_graph(g, nodes, edges, label=ident)
        hits = collections.Counter(e.rule for e in edges)
        tg = ThreatGraph(ident, graph, sources, part_seeds, truncated, hits)
        if truncated:
            msg = "threat graph {} truncated at {} nodes".format(
                ident, cfg.max_nodes)
            warnings.warn(msg)
            LOGGER.warning(msg)
        out.append(tg)

    LOGGER.info("sampled {} threat graphs from {} POIs (k={})".format(
        len(out), len(seeds), cfg.k))
    return out
