"""
Attributed multigraphs shared by query, threat and training graphs, and
their JSON form::

    {"nodes": [{"id": int, "name": str, "abs": str}],
     "edges": [{"src": int, "dst": int, "op": str, "ts": int or null}],
     "label": str or null}

Edges point along the information flow. Threat graphs add a
``provenance`` object; a ``meta`` object may echo the configuration. Both
are ignored when loading.
"""
import collections
import glob
import os

from ..config import setup_logger
from ..util import SchemaError, read_json, write_json
from ..vocab import AbsType, EdgeOp, normalize_name

LOGGER = setup_logger(__name__)

AttrEdge = collections.namedtuple("AttrEdge", ["src", "dst", "op", "ts"])

_TOP_KEYS = {"nodes", "edges", "label", "provenance", "meta"}


class AttrGraph(object):
    """
    Directed attributed multigraph with dense node ids

    Parallel edges are kept when their ops differ; an edge repeating
    ``(src, dst, op)`` is folded into the existing one, which keeps the
    earliest timestamp.

    Parameters
    ----------
    label : str, optional
        Campaign tag or graph name.
    """

    def __init__(self, label=None):
        self.label = label
        self.names = []
        self.abs = []
        self._edges = []
        self._edge_pos = {}

    @property
    def n_nodes(self):
        return len(self.names)

    @property
    def n_edges(self):
        return len(self._edges)

    @property
    def edges(self):
        return list(self._edges)

    def nodes(self):
        return range(self.n_nodes)

    def add_node(self, name, abs_type):
        abs_type = AbsType(abs_type)
        self.names.append(str(name))
        self.abs.append(abs_type)
        return len(self.names) - 1

    def add_edge(self, src, dst, op, ts=None):
        """
        Add ``src -> dst`` labelled ``op``

        Returns
        -------
        added : bool
            False when the edge was folded into an existing one.
        """
        for end in (src, dst):
            if not 0 <= end < self.n_nodes:
                msg = "edge endpoint {} outside [0, {})"
                raise ValueError(msg.format(end, self.n_nodes))
        op = EdgeOp(op)
        key = (src, dst, op)
        pos = self._edge_pos.get(key)
        if pos is not None:
            old = self._edges[pos]
            if ts is not None and (old.ts is None or ts < old.ts):
                self._edges[pos] = old._replace(ts=ts)
            return False
        self._edge_pos[key] = len(self._edges)
        self._edges.append(AttrEdge(src, dst, op, ts))
        return True

    def has_edge(self, src, dst, op):
        return (src, dst, EdgeOp(op)) in self._edge_pos

    def key(self, node):
        """Identity of a node across graphs: (normalized name, abs type)."""
        abs_type = self.abs[node]
        return normalize_name(abs_type.kind, self.names[node]), abs_type

    def neighbors(self, node):
        """Distinct neighbours of ``node`` ignoring direction."""
        out = set()
        for e in self._edges:
            if e.src == node:
                out.add(e.dst)
            elif e.dst == node:
                out.add(e.src)
        out.discard(node)
        return out

    def copy(self):
        g = AttrGraph(self.label)
        g.names = list(self.names)
        g.abs = list(self.abs)
        g._edges = list(self._edges)
        g._edge_pos = dict(self._edge_pos)
        return g

    def to_dict(self):
        return {
            "nodes": [{"id": i, "name": n, "abs": a.value}
                      for (i, (n, a)) in enumerate(zip(self.names, self.abs))],
            "edges": [{"src": e.src, "dst": e.dst, "op": e.op.value,
                       "ts": e.ts} for e in self._edges],
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data, path=None):
        """
        Build a graph from its JSON form

        Raises
        ------
        SchemaError
            With the offending field path, e.g. ``edges[3].op``.
        """
        where = (path + ":") if path else ""
        if not isinstance(data, dict):
            raise SchemaError("expected an object", path=where + "$")
        extra = set(data) - _TOP_KEYS
        if extra:
            raise SchemaError("unknown keys {}".format(sorted(extra)),
                              path=where + "$")
        label = data.get("label")
        if label is not None and not isinstance(label, str):
            raise SchemaError("expected a string", path=where + "label")

        nodes = data.get("nodes")
        if not isinstance(nodes, list):
            raise SchemaError("expected a list", path=where + "nodes")
        by_id = {}
        for (i, node) in enumerate(nodes):
            field = "{}nodes[{}]".format(where, i)
            if not isinstance(node, dict):
                raise SchemaError("expected an object", path=field)
            ident = node.get("id")
            if not isinstance(ident, int) or isinstance(ident, bool):
                raise SchemaError("expected an integer", path=field + ".id")
            if ident in by_id:
                raise SchemaError("duplicate id {}".format(ident),
                                  path=field + ".id")
            name = node.get("name")
            if not isinstance(name, str) or not name:
                raise SchemaError("expected a non-empty string",
                                  path=field + ".name")
            try:
                abs_type = AbsType(node.get("abs"))
            except ValueError:
                raise SchemaError("unknown abstract type {!r}".format(
                    node.get("abs")), path=field + ".abs")
            by_id[ident] = (name, abs_type)
        if sorted(by_id) != list(range(len(by_id))):
            raise SchemaError("node ids must be 0..{}".format(len(by_id) - 1),
                              path=where + "nodes")

        g = cls(label)
        for ident in range(len(by_id)):
            g.add_node(*by_id[ident])

        edges = data.get("edges", [])
        if not isinstance(edges, list):
            raise SchemaError("expected a list", path=where + "edges")
        for (i, edge) in enumerate(edges):
            field = "{}edges[{}]".format(where, i)
            if not isinstance(edge, dict):
                raise SchemaError("expected an object", path=field)
            for end in ("src", "dst"):
                v = edge.get(end)
                if not isinstance(v, int) or not 0 <= v < g.n_nodes:
                    raise SchemaError("expected a node id", path=field + "." + end)
            try:
                op = EdgeOp(edge.get("op"))
            except ValueError:
                raise SchemaError("unknown op {!r}".format(edge.get("op")),
                                  path=field + ".op")
            ts = edge.get("ts")
            if ts is not None and (not isinstance(ts, int) or
                                   isinstance(ts, bool)):
                raise SchemaError("expected an integer or null",
                                  path=field + ".ts")
            g.add_edge(edge["src"], edge["dst"], op, ts)
        return g

    def __eq__(self, other):
        if not isinstance(other, AttrGraph):
            return NotImplemented
        return (self.label == other.label and self.names == other.names and
                self.abs == other.abs and self._edges == other._edges)

    def __ne__(self, other):
        res = self.__eq__(other)
        return res if res is NotImplemented else not res

    def __repr__(self):
        msg = "AttrGraph(label={!r}, nodes={}, edges={})"
        return msg.format(self.label, self.n_nodes, self.n_edges)


def to_attr_graph(g):
    """
    Project a threat graph onto its plain attributed graph

    Parameters
    ----------
    g : ThreatGraph or AttrGraph
        Attributed graphs are returned unchanged.

    Returns
    -------
    graph : AttrGraph
    """
    if isinstance(g, AttrGraph):
        return g
    return g.graph.copy()


def load_graph(path):
    """Read one graph JSON file."""
    return AttrGraph.from_dict(read_json(path, stage="schema"), path=path)


def save_graph(g, path, meta=None):
    """
    Write a graph (or a threat graph with its provenance annex) as JSON

    Parameters
    ----------
    g : AttrGraph or ThreatGraph

    path : str

    meta : dict, optional
        Echoed under ``meta``, typically the effective configuration.
    """
    payload = to_attr_graph(g).to_dict()
    annex = getattr(g, "provenance", None)
    if annex is not None:
        payload["provenance"] = annex()
    if meta is not None:
        payload["meta"] = meta
    write_json(path, payload)
    LOGGER.debug("wrote graph {} to {}".format(payload["label"], path))


def load_query_dir(dirname):
    """
    Load every ``*.json`` graph of a directory, sorted by file name

    Graphs without a label take the file stem as label.

    Returns
    -------
    graphs : list of AttrGraph
    """
    if not os.path.isdir(dirname):
        raise SchemaError("not a directory", path=dirname, stage="schema")
    out = []
    for fn in sorted(glob.glob(os.path.join(dirname, "*.json"))):
        g = load_graph(fn)
        if g.label is None:
            g.label = os.path.splitext(os.path.basename(fn))[0]
        out.append(g)
    LOGGER.info("loaded {} query graphs from {}".format(len(out), dirname))
    return out
