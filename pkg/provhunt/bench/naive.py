"""
Uncompressed adjacency-list provenance store, the memory baseline for the
packed graph.
"""
import collections

from ..vocab import EntityKind

# byte model of one adjacency entry and one node record
POINTER_BYTES = 8
TS_BYTES = 8
DIR_BYTES = 1
NODE_OVERHEAD_BYTES = 16

NaiveEdge = collections.namedtuple("NaiveEdge", ["sbj", "obj", "op", "dir",
                                                 "ts"])


class NaiveStore(object):
    """
    Every entity keeps its full id, name and kind; every edge sits in the
    subject's out-list and the object's in-list with its op spelled out.

    Parameters
    ----------
    events : iterable of AuditEvent, optional
    """

    def __init__(self, events=()):
        self._index = {}
        self.ids = []
        self.names = []
        self.kinds = []
        self.out_adj = []
        self.in_adj = []
        self.n_edges = 0
        for e in events:
            self.add_event(e)

    def _node(self, ident, name, kind):
        node = self._index.get(ident)
        if node is None:
            node = len(self.ids)
            self._index[ident] = node
            self.ids.append(ident)
            self.names.append(name)
            self.kinds.append(kind)
            self.out_adj.append([])
            self.in_adj.append([])
        return node

    def add_event(self, e):
        s = self._node(e.sbj_id, e.sbj_name, EntityKind.PROCESS)
        o = self._node(e.obj_id, e.obj_name or e.obj_addr, e.obj_kind)
        op = e.op.canonical.value
        self.out_adj[s].append((o, op, e.dir.value, e.ts))
        self.in_adj[o].append((s, op, e.dir.value, e.ts))
        self.n_edges += 1

    @property
    def n_nodes(self):
        return len(self.ids)

    def edges(self):
        """Stored edges as (sbj id, obj id, op, dir, ts)."""
        for (s, adj) in enumerate(self.out_adj):
            for (o, op, d, ts) in adj:
                yield NaiveEdge(self.ids[s], self.ids[o], op, d, ts)

    def nbytes(self):
        total = 0
        for node in range(self.n_nodes):
            total += NODE_OVERHEAD_BYTES
            total += len(self.ids[node].encode("utf-8"))
            total += len(self.names[node].encode("utf-8"))
            total += len(self.kinds[node].value)
            for adj in (self.out_adj[node], self.in_adj[node]):
                for (_, op, _, _) in adj:
                    total += POINTER_BYTES + TS_BYTES + DIR_BYTES + len(op)
        return total

    def __repr__(self):
        return "NaiveStore(nodes={}, edges={})".format(self.n_nodes,
                                                       self.n_edges)


def ppg_edge_multiset(g):
    """Edges of a packed graph in the NaiveStore edge form."""
    return collections.Counter(
        NaiveEdge(g.original_id(e.sbj), g.original_id(e.obj), e.op.value,
                  e.dir.value, e.ts)
        for e in g.edges())


def naive_edge_multiset(store):
    return collections.Counter(store.edges())
