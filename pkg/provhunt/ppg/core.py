"""
The packed provenance graph.

Processes that act as subjects live in the subject list, the objects they
touch (files, netflows and processes acted upon) in the object list. Each
list entry is a 64-bit header word plus an edge queue. A subject queue holds
full edge records, an object queue only back-references to its subjects.
Edge records locate the other endpoint by its entity index, stored relative
to the entity index of the owning node.

A node starts sparse (narrow records, at most ``sparse_queue_cap`` edges)
and is promoted to the extended form once its queue fills or a relative
index no longer fits the sparse width. Original ids, names and the
id -> node map are kept in side tables outside the packed region.
"""
import array
import collections
import enum
import warnings

from ..config import options, setup_logger
from ..util import CapacityError, ProvHuntError
from ..vocab import AbsType, EdgeOp, EntityKind, EventDir, default_rules
from .codec import (
    DAY_MS, MAX_DAYS, MAX_NODES, SPARSE_CAP, SPARSE_VERSION_MAX,
    EXTENDED_VERSION_MAX, EDGE_BYTES, NODE_BYTES, NODE_HEADER,
    SPARSE_SUBJECT, SPARSE_OBJECT, EXTENDED_SUBJECT, EXTENDED_OBJECT,
    pack_subject_edge, unpack_subject_edge, pack_object_edge,
    unpack_object_edge
)

LOGGER = setup_logger(__name__)

FIXED_OVERHEAD_BYTES = 64

_KINDS = list(EntityKind)
_KIND_CODES = {k: i for (i, k) in enumerate(_KINDS)}


class InsertResult(enum.Enum):
    INSERTED = "inserted"
    SUPPRESSED_BY_VERSION = "suppressed_by_version"


class Direction(enum.Enum):
    """Side of a node from the point of view of information flow."""
    IN = "in"
    OUT = "out"


class Order(enum.Enum):
    TIME_ASC = "asc"
    TIME_DESC = "desc"


class Role(enum.Enum):
    SUBJECT = "subject"
    OBJECT = "object"


Neighbor = collections.namedtuple("Neighbor", ["node", "op", "dir", "ts"])
NodeView = collections.namedtuple("NodeView", ["abs", "exp"])
Edge = collections.namedtuple("Edge", ["sbj", "obj", "op", "dir", "ts"])


class _ExtendedQueue(object):
    __slots__ = ["words", "aux"]

    def __init__(self, with_aux):
        self.words = array.array("Q")
        self.aux = array.array("I") if with_aux else None

    def append(self, word, aux=None):
        self.words.append(word)
        if self.aux is not None:
            self.aux.append(aux)

    def __len__(self):
        return len(self.words)


def _extended_capacity(n):
    # doubling from the sparse cap, the length at which a queue is promoted
    cap = SPARSE_CAP
    while cap < n:
        cap *= 2
    return cap


def _is_exp(header):
    return NODE_HEADER.get(header, "exp") == 1


class _PpgView(object):
    """Read operations shared by the live graph and its snapshots."""

    def _qlen(self, role, idx):
        if role is Role.SUBJECT:
            if self._sbj_len is not None:
                return self._sbj_len[idx]
            return len(self._sbj_q[idx])
        if self._obj_len is not None:
            return self._obj_len[idx]
        return len(self._obj_q[idx])

    # -- entity accessors --

    @property
    def n_nodes(self):
        return len(self._ids)

    @property
    def n_edges(self):
        return self.edge_count

    @property
    def n_subjects(self):
        return len(self._sbj_hdr)

    @property
    def n_objects(self):
        return len(self._obj_hdr)

    def nodes(self):
        return range(self.n_nodes)

    def has_node(self, node):
        return isinstance(node, int) and 0 <= node < self.n_nodes

    def _check(self, node):
        if not self.has_node(node):
            raise KeyError("unknown node {!r}".format(node))

    def name(self, node):
        self._check(node)
        return self._names[node]

    def original_id(self, node):
        self._check(node)
        return self._ids[node]

    def kind(self, node):
        self._check(node)
        return _KINDS[self._kinds[node]]

    def abs_type(self, node):
        self._check(node)
        return AbsType.from_code(self._abs[node])

    def node_index(self, original_id):
        try:
            return self._index[original_id]
        except KeyError:
            raise KeyError("unknown entity id {!r}".format(original_id))

    def node_view(self, node):
        """Abstract type and explosion flag; exp is set if either role is."""
        self._check(node)
        exp = False
        s = self._ent_sbj[node]
        if s >= 0 and _is_exp(self._sbj_hdr[s]):
            exp = True
        o = self._ent_obj[node]
        if not exp and o >= 0 and _is_exp(self._obj_hdr[o]):
            exp = True
        return NodeView(AbsType.from_code(self._abs[node]), exp)

    def process_nodes(self):
        code = _KIND_CODES[EntityKind.PROCESS]
        return [n for n in range(self.n_nodes) if self._kinds[n] == code]

    def roles(self, node):
        self._check(node)
        return self._ent_sbj[node], self._ent_obj[node]

    def header(self, role, idx):
        """Decoded header fields of a subject or object list entry."""
        hdr = self._sbj_hdr[idx] if role is Role.SUBJECT else self._obj_hdr[idx]
        return dict(zip(NODE_HEADER.fields, NODE_HEADER.unpack(hdr)))

    def queue_length(self, role, idx):
        return self._qlen(role, idx)

    def degree(self, node):
        self._check(node)
        s, o = self._ent_sbj[node], self._ent_obj[node]
        n = 0
        if s >= 0:
            n += self._qlen(Role.SUBJECT, s)
        if o >= 0:
            n += self._qlen(Role.OBJECT, o)
        return n

    # -- decoding --

    def _decode_subject(self, s):
        q = self._sbj_q[s]
        n = self._qlen(Role.SUBJECT, s)
        base = self.origin_day * DAY_MS
        node = self._sbj_ent[s]
        obj = self._ent_obj
        out = []
        if _is_exp(self._sbj_hdr[s]):
            words, aux = q.words, q.aux
            for i in range(n):
                delta, code, d, rel, ver = unpack_subject_edge(
                    True, words[i], aux[i])
                out.append((obj[node + delta], code, d, rel + base, ver))
        else:
            for i in range(n):
                delta, code, d, rel, ver = unpack_subject_edge(False, q[i])
                out.append((obj[node + delta], code, d, rel + base, ver))
        return out

    def _decode_object(self, o):
        q = self._obj_q[o]
        n = self._qlen(Role.OBJECT, o)
        if _is_exp(self._obj_hdr[o]):
            words = q.words
            return [unpack_object_edge(True, words[i]) for i in range(n)]
        return [unpack_object_edge(False, q[i]) for i in range(n)]

    def _resolve_object(self, o, want_dir, cache):
        # the k-th back-reference (s, code, dir) of an object pairs with the
        # k-th record (o, code, dir) in the queue of subject s
        node = self._obj_ent[o]
        seen = collections.Counter()
        out = []
        for (delta, code, dirbit) in self._decode_object(o):
            s = self._ent_sbj[node + delta]
            key = (s, code, dirbit)
            k = seen[key]
            seen[key] += 1
            if want_dir is not None and dirbit != want_dir:
                continue
            table = cache.get((s, o))
            if table is None:
                table = collections.defaultdict(list)
                for (target, c, d, ts, _) in self._decode_subject(s):
                    if target == o:
                        table[(c, d)].append(ts)
                cache[(s, o)] = table
            try:
                ts = table[(code, dirbit)][k]
            except IndexError:
                msg = "object {} references a missing edge of subject {}"
                raise ProvHuntError(msg.format(o, s), "ppg")
            out.append((s, code, dirbit, ts))
        return out

    def neighbors(self, node, direction, order=Order.TIME_ASC):
        """
        Decoded edges on one side of a node, in chronological order

        Parameters
        ----------
        node : int

        direction : Direction
            ``OUT`` yields edges along which information leaves ``node``,
            ``IN`` those along which it arrives.

        order : Order

        Returns
        -------
        neighbors : iterator of Neighbor
            ``(node, op, dir, ts)``; ties keep storage order.
        """
        self._check(node)
        direction = Direction(direction)
        order = Order(order)
        out = []

        s = self._ent_sbj[node]
        if s >= 0:
            want = 0 if direction is Direction.OUT else 1
            for (o, code, d, ts, _) in self._decode_subject(s):
                if d == want:
                    out.append(Neighbor(self._obj_ent[o], EdgeOp.from_code(code),
                                        EventDir.from_bit(d), ts))

        o = self._ent_obj[node]
        if o >= 0:
            want = 1 if direction is Direction.OUT else 0
            for (s2, code, d, ts) in self._resolve_object(o, want, {}):
                out.append(Neighbor(self._sbj_ent[s2], EdgeOp.from_code(code),
                                    EventDir.from_bit(d), ts))

        out.sort(key=lambda n: n.ts, reverse=order is Order.TIME_DESC)
        return iter(out)

    def edges(self):
        """Every stored edge as (sbj node, obj node, op, dir, ts)."""
        for s in range(self.n_subjects):
            sbj = self._sbj_ent[s]
            for (o, code, d, ts, _) in self._decode_subject(s):
                yield Edge(sbj, self._obj_ent[o], EdgeOp.from_code(code),
                           EventDir.from_bit(d), ts)

    # -- accounting --

    def memory_report(self):
        """
        Byte accounting of the packed arenas

        Returns
        -------
        report : dict
            ``total_bytes`` covers the fixed overhead, node headers and edge
            queues. Sparse queues are billed at their length, extended ones
            at their capacity, which doubles from ``SPARSE_CAP``. Side
            tables (names, original ids, id map) are reported separately as
            ``side_table_bytes``.
        """
        node_counts = collections.Counter()
        edge_counts = collections.Counter()
        edge_bytes = collections.Counter()
        exp_nodes = set()

        for (role, headers) in [(Role.SUBJECT, self._sbj_hdr),
                                (Role.OBJECT, self._obj_hdr)]:
            for idx in range(len(headers)):
                ext = _is_exp(headers[idx])
                cls = "{}_{}".format("extended" if ext else "sparse",
                                     role.value)
                n = self._qlen(role, idx)
                node_counts[cls] += 1
                edge_counts[cls] += n
                if ext:
                    edge_bytes[cls] += _extended_capacity(n) * EDGE_BYTES[cls]
                    ent = (self._sbj_ent if role is Role.SUBJECT
                           else self._obj_ent)[idx]
                    exp_nodes.add(ent)
                else:
                    edge_bytes[cls] += n * EDGE_BYTES[cls]

        node_bytes = NODE_BYTES * (len(self._sbj_hdr) + len(self._obj_hdr))
        total = FIXED_OVERHEAD_BYTES + node_bytes + sum(edge_bytes.values())

        side = 0
        for (ident, name) in zip(self._ids, self._names):
            side += len(ident.encode("utf-8")) + len(name.encode("utf-8"))
        # id map slot, two role indices, kind and abstract type per entity
        side += self.n_nodes * (8 + 16 + 2)

        days = 0 if self.origin_day is None else self.max_day + 1
        classes = ["sparse_subject", "extended_subject", "sparse_object",
                   "extended_object"]
        return {
            "total_bytes": total,
            "fixed_overhead_bytes": FIXED_OVERHEAD_BYTES,
            "node_bytes": node_bytes,
            "edge_bytes": sum(edge_bytes.values()),
            "bytes_per_node_class": {c: NODE_BYTES for c in classes},
            "bytes_per_edge_class": dict(EDGE_BYTES),
            "node_bytes_by_class": {c: NODE_BYTES * node_counts[c]
                                    for c in classes},
            "edge_bytes_by_class": {c: edge_bytes[c] for c in classes},
            "node_counts": {c: node_counts[c] for c in classes},
            "edge_counts": {c: edge_counts[c] for c in classes},
            "entity_count": self.n_nodes,
            "edge_count": self.edge_count,
            "exp_node_count": len(exp_nodes),
            "suppressed_events": self.suppressed,
            "side_table_bytes": side,
            "days_spanned": days,
            "bytes_per_day": total / days if days else 0.0,
        }


class Ppg(_PpgView):
    """
    Append-only packed provenance graph

    Parameters
    ----------
    rules : AbstractionRules, optional
        Defaults to ``vocab.default_rules()``.

    versioning : bool, optional
        Suppress events whose object version did not change since the last
        identical event. Defaults to ``ppg.versioning``.

    sparse_queue_cap : int, optional
        Defaults to ``ppg.sparse_queue_cap`` (at most 16).
    """

    def __init__(self, rules=None, versioning=None, sparse_queue_cap=None):
        self.rules = rules if rules is not None else default_rules()
        self.versioning = options["ppg.versioning"] \
            if versioning is None else bool(versioning)
        cap = options["ppg.sparse_queue_cap"] \
            if sparse_queue_cap is None else int(sparse_queue_cap)
        if not 1 <= cap <= SPARSE_CAP:
            msg = "sparse_queue_cap must lie in [1, {}], got {}"
            raise ValueError(msg.format(SPARSE_CAP, cap))
        self.sparse_queue_cap = cap

        self.origin_day = None
        self.max_day = 0
        self.edge_count = 0
        self.suppressed = 0
        self.promotions = 0

        self._sbj_hdr = array.array("Q")
        self._obj_hdr = array.array("Q")
        self._sbj_q = []
        self._obj_q = []
        self._sbj_len = None
        self._obj_len = None
        self._sbj_ent = array.array("I")
        self._obj_ent = array.array("I")

        self._ids = []
        self._names = []
        self._kinds = array.array("B")
        self._abs = array.array("B")
        self._ent_sbj = array.array("q")
        self._ent_obj = array.array("q")
        self._index = {}

        self._last_version = {}
        self._saturation_warned = False

    # -- construction --

    def _entity(self, ident, kind, name, addr):
        node = self._index.get(ident)
        if node is not None:
            if self._kinds[node] != _KIND_CODES[kind]:
                msg = "entity {!r} seen as both {} and {}"
                raise ProvHuntError(msg.format(
                    ident, _KINDS[self._kinds[node]].value, kind.value), "ppg")
            return node

        node = len(self._ids)
        if node >= MAX_NODES:
            raise CapacityError("node index space of 2^32 entities exhausted")
        abs_type = self.rules.classify(kind, name, addr)
        self._index[ident] = node
        self._ids.append(ident)
        self._names.append(name or (addr or ""))
        self._kinds.append(_KIND_CODES[kind])
        self._abs.append(abs_type.code)
        self._ent_sbj.append(-1)
        self._ent_obj.append(-1)
        return node

    def _role(self, node, role, day):
        if role is Role.SUBJECT:
            idx = self._ent_sbj[node]
            if idx >= 0:
                return idx
            idx = len(self._sbj_hdr)
            if idx >= MAX_NODES:
                raise CapacityError("subject list exhausted the 32-bit index")
            self._sbj_hdr.append(NODE_HEADER.pack(node, self._abs[node], 0, 0,
                                                  day))
            self._sbj_q.append(array.array("Q"))
            self._sbj_ent.append(node)
            self._ent_sbj[node] = idx
            return idx

        idx = self._ent_obj[node]
        if idx >= 0:
            return idx
        idx = len(self._obj_hdr)
        if idx >= MAX_NODES:
            raise CapacityError("object list exhausted the 32-bit index")
        self._obj_hdr.append(NODE_HEADER.pack(node, self._abs[node], 0, 0,
                                              day))
        self._obj_q.append(array.array("I"))
        self._obj_ent.append(node)
        self._ent_obj[node] = idx
        return idx

    def _promote(self, role, idx):
        headers = self._sbj_hdr if role is Role.SUBJECT else self._obj_hdr
        if _is_exp(headers[idx]):
            return False

        if role is Role.SUBJECT:
            old = self._sbj_q[idx]
            new = _ExtendedQueue(with_aux=True)
            for word in old:
                delta, code, d, rel, ver = unpack_subject_edge(False, word)
                new.append(*pack_subject_edge(True, delta, code, d, rel, ver))
            self._sbj_q[idx] = new
        else:
            old = self._obj_q[idx]
            new = _ExtendedQueue(with_aux=False)
            for word in old:
                delta, code, d = unpack_object_edge(False, word)
                new.append(pack_object_edge(True, delta, code, d))
            self._obj_q[idx] = new

        headers[idx] = NODE_HEADER.replace(headers[idx], "exp", 1)
        self.promotions += 1
        LOGGER.debug("promoted {} {} with {} edges".format(
            role.value, idx, len(new)))
        return True

    def promote(self, node):
        """
        Move every role of ``node`` to the extended form; no-op when done.

        Returns
        -------
        changed : bool
        """
        self._check(node)
        changed = False
        if self._ent_sbj[node] >= 0:
            changed |= self._promote(Role.SUBJECT, self._ent_sbj[node])
        if self._ent_obj[node] >= 0:
            changed |= self._promote(Role.OBJECT, self._ent_obj[node])
        return changed

    def _append_subject(self, s, delta, code, dirbit, rel_ts, ver):
        ext = _is_exp(self._sbj_hdr[s])
        if not ext and (len(self._sbj_q[s]) >= self.sparse_queue_cap or
                        not SPARSE_SUBJECT.fits("delta", delta)):
            self._promote(Role.SUBJECT, s)
            ext = True
        if ext and not EXTENDED_SUBJECT.fits("delta", delta):
            msg = "subject {} is {} entries away from its object, beyond the "
            msg += "27-bit relative index"
            raise CapacityError(msg.format(s, delta))
        word, aux = pack_subject_edge(ext, delta, code, dirbit, rel_ts, ver)
        if ext:
            self._sbj_q[s].append(word, aux)
        else:
            self._sbj_q[s].append(word)

    def _append_object(self, o, delta, code, dirbit):
        ext = _is_exp(self._obj_hdr[o])
        if not ext and (len(self._obj_q[o]) >= self.sparse_queue_cap or
                        not SPARSE_OBJECT.fits("delta", delta)):
            self._promote(Role.OBJECT, o)
            ext = True
        if ext and not EXTENDED_OBJECT.fits("delta", delta):
            msg = "object {} is {} entries away from its subject, beyond the "
            msg += "32-bit relative index"
            raise CapacityError(msg.format(o, delta))
        self._obj_q[o].append(pack_object_edge(ext, delta, code, dirbit))

    def add_event(self, e):
        """
        Insert one audit event

        Parameters
        ----------
        e : AuditEvent

        Returns
        -------
        result : InsertResult
        """
        day = e.ts // DAY_MS
        if self.origin_day is None:
            self.origin_day = day
        rel_day = day - self.origin_day
        if not 0 <= rel_day < MAX_DAYS:
            msg = "event at ts={} is {} days from the graph origin; the "
            msg += "5-bit date field covers days 0..{}"
            raise CapacityError(msg.format(e.ts, rel_day, MAX_DAYS - 1))

        s_node = self._entity(e.sbj_id, EntityKind.PROCESS, e.sbj_name, None)
        o_node = self._entity(e.obj_id, e.obj_kind, e.obj_name, e.obj_addr)
        s = self._role(s_node, Role.SUBJECT, rel_day)
        o = self._role(o_node, Role.OBJECT, rel_day)

        code = e.op.code
        dirbit = e.dir.bit
        header = self._obj_hdr[o]
        ver = NODE_HEADER.get(header, "version")
        key = (s, o, code, dirbit)
        if self.versioning and self._last_version.get(key) == ver:
            self.suppressed += 1
            LOGGER.debug("suppressed {} {}->{} at version {}".format(
                e.op.value, e.sbj_id, e.obj_id, ver))
            return InsertResult.SUPPRESSED_BY_VERSION

        if dirbit == 0:
            cap = EXTENDED_VERSION_MAX if _is_exp(header) else SPARSE_VERSION_MAX
            if ver < cap:
                ver += 1
                self._obj_hdr[o] = NODE_HEADER.replace(header, "version", ver)
            elif not self._saturation_warned:
                self._saturation_warned = True
                msg = "version counter of {!r} saturated at {}".format(
                    e.obj_id, cap)
                warnings.warn(msg)
                LOGGER.warning(msg)
        if self.versioning:
            self._last_version[key] = ver

        self._append_subject(s, o_node - s_node, code, dirbit,
                             e.ts - self.origin_day * DAY_MS, ver)
        self._append_object(o, s_node - o_node, code, dirbit)
        self.edge_count += 1
        if rel_day > self.max_day:
            self.max_day = rel_day
        return InsertResult.INSERTED

    def snapshot(self):
        """Read-only view frozen at the current state."""
        return PpgSnapshot(self)


class PpgSnapshot(_PpgView):
    """
    Frozen view of a ``Ppg``.

    Header words and side tables are copied; edge queues are shared with the
    live graph and read only up to the lengths recorded here. Promotion in
    the live graph swaps in a new queue, leaving the shared one untouched.
    """

    def __init__(self, g):
        self.rules = g.rules
        self.versioning = g.versioning
        self.sparse_queue_cap = g.sparse_queue_cap
        self.origin_day = g.origin_day
        self.max_day = g.max_day
        self.edge_count = g.edge_count
        self.suppressed = g.suppressed

        self._sbj_hdr = array.array("Q", g._sbj_hdr)
        self._obj_hdr = array.array("Q", g._obj_hdr)
        self._sbj_q = list(g._sbj_q)
        self._obj_q = list(g._obj_q)
        self._sbj_len = array.array("Q", (len(q) for q in g._sbj_q))
        self._obj_len = array.array("Q", (len(q) for q in g._obj_q))
        self._sbj_ent = array.array("I", g._sbj_ent)
        self._obj_ent = array.array("I", g._obj_ent)

        self._ids = list(g._ids)
        self._names = list(g._names)
        self._kinds = array.array("B", g._kinds)
        self._abs = array.array("B", g._abs)
        self._ent_sbj = array.array("q", g._ent_sbj)
        self._ent_obj = array.array("q", g._ent_obj)
        self._index = dict(g._index)

    def snapshot(self):
        return self


def build_ppg(events, rules=None, versioning=None, sparse_queue_cap=None):
    """Build a graph from an event sequence; returns the live ``Ppg``."""
    g = Ppg(rules=rules, versioning=versioning,
            sparse_queue_cap=sparse_queue_cap)
    for e in events:
        g.add_event(e)
    LOGGER.info("built graph entities={} edges={} suppressed={}".format(
        g.n_nodes, g.edge_count, g.suppressed))
    return g
