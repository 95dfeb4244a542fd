"""
Recall-first points of interest: events matching sensitive operation
patterns flag their acting process.
"""
import collections
import ipaddress
import os

from ..config import options, setup_logger
from ..util import ProvHuntError, SchemaError, read_json, write_json
from ..vocab import (
    EdgeOp, EntityKind, NameMatcher, normalize_name, parse_address
)

LOGGER = setup_logger(__name__)

DEFAULT_PATTERNS_FILE = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), "default_patterns.json"
)

WILDCARD = "*"

PoiMatch = collections.namedtuple(
    "PoiMatch", ["ts", "sbj_id", "op", "obj_id", "pattern"]
)


def _object_matchers(pattern):
    out = {}
    for kind in (EntityKind.PROCESS, EntityKind.FILE):
        out[kind] = NameMatcher(kind, normalize_name(kind, pattern))
    try:
        ipaddress.ip_network(pattern, strict=False)
        out[EntityKind.NETFLOW] = NameMatcher(EntityKind.NETFLOW, pattern)
    except ValueError:
        out[EntityKind.NETFLOW] = NameMatcher(
            EntityKind.FILE, normalize_name(EntityKind.FILE, pattern))
    return out


class PoiPattern(object):
    """
    ``<sbj, op, obj>`` triple where any field may be the wildcard ``*``

    Subjects match on the process basename (with or without extension),
    objects on the normalized path, a glob, or a CIDR range for netflows.

    Parameters
    ----------
    sbj, op, obj : str
    """
    __slots__ = ["sbj", "op", "obj", "_sbj", "_op", "_obj"]

    def __init__(self, sbj, op, obj):
        self.sbj = str(sbj).strip()
        self.op = str(op).strip().lower()
        self.obj = str(obj).strip()
        if self.sbj == self.op == self.obj == WILDCARD:
            raise ValueError("a POI pattern needs at least one non-wildcard "
                             "field")
        self._sbj = None
        if self.sbj != WILDCARD:
            self._sbj = NameMatcher(EntityKind.PROCESS,
                                    normalize_name(EntityKind.FILE, self.sbj))
        self._op = None if self.op == WILDCARD else EdgeOp(self.op).canonical
        self._obj = None if self.obj == WILDCARD else _object_matchers(self.obj)

    def matches(self, e):
        if self._op is not None and e.op.canonical is not self._op:
            return False
        if self._sbj is not None and \
                not self._sbj(normalize_name(EntityKind.PROCESS, e.sbj_name),
                              None):
            return False
        if self._obj is not None:
            matcher = self._obj[e.obj_kind]
            if e.obj_kind is EntityKind.NETFLOW:
                text = e.obj_addr if e.obj_addr is not None else e.obj_name
                if not matcher(normalize_name(e.obj_kind, text),
                               parse_address(text)):
                    return False
            elif not matcher(normalize_name(e.obj_kind, e.obj_name), None):
                return False
        return True

    def to_dict(self):
        return {"sbj": self.sbj, "op": self.op, "obj": self.obj}

    def __str__(self):
        return "<{}, {}, {}>".format(self.sbj, self.op, self.obj)

    def __repr__(self):
        return "PoiPattern({!r}, {!r}, {!r})".format(self.sbj, self.op, self.obj)


class PoiSet(object):
    """
    Ordered set of original entity ids designated points of interest

    Parameters
    ----------
    ids : iterable of str

    matches : list of PoiMatch, optional
        Log of the events that flagged the ids.
    """

    def __init__(self, ids=(), matches=None):
        self._ids = []
        self._seen = set()
        for ident in ids:
            self.add(ident)
        self.matches = list(matches or [])

    def add(self, ident):
        if ident not in self._seen:
            self._seen.add(ident)
            self._ids.append(ident)

    @property
    def ids(self):
        return list(self._ids)

    def __len__(self):
        return len(self._ids)

    def __iter__(self):
        return iter(self._ids)

    def __contains__(self, ident):
        return ident in self._seen

    def indices(self, g):
        """
        Node indices of the ids in ``g``

        Raises
        ------
        ProvHuntError
            When an id is not an entity of ``g``.
        """
        out = []
        for ident in self._ids:
            try:
                out.append(g.node_index(ident))
            except KeyError:
                msg = "POI {!r} is not an entity of the graph".format(ident)
                raise ProvHuntError(msg, "sample")
        return out

    def to_dict(self):
        return {
            "pois": self.ids,
            "matches": [{"ts": m.ts, "sbj": m.sbj_id, "op": m.op.value,
                         "obj": m.obj_id, "pattern": m.pattern}
                        for m in self.matches],
        }


def save_pois(pois, path, meta=None):
    payload = pois.to_dict()
    if meta is not None:
        payload["meta"] = meta
    write_json(path, payload)


def load_pois(path):
    """Read a POI file: ``{"pois": [...]}`` or a bare list of ids."""
    data = read_json(path, stage="schema")
    if isinstance(data, dict):
        data = data.get("pois")
    if not isinstance(data, list):
        raise SchemaError("expected a list of entity ids", path=path + ":pois")
    for (i, ident) in enumerate(data):
        if not isinstance(ident, str):
            raise SchemaError("expected a string",
                              path="{}:pois[{}]".format(path, i))
    return PoiSet(data)


def match_pois(events, patterns):
    """
    Flag the subject of every event matching any pattern

    Parameters
    ----------
    events : iterable of AuditEvent

    patterns : list of PoiPattern

    Returns
    -------
    pois : PoiSet
        Subject ids in order of first match; ``pois.matches`` logs every
        matching event with the first pattern it matched.
    """
    pois = PoiSet()
    n_events = 0
    for e in events:
        n_events += 1
        for p in patterns:
            if p.matches(e):
                pois.add(e.sbj_id)
                pois.matches.append(PoiMatch(e.ts, e.sbj_id, e.op, e.obj_id,
                                             str(p)))
                break
    LOGGER.info("matched {} events of {} to {} POIs".format(
        len(pois.matches), n_events, len(pois)))
    return pois


def load_patterns(path):
    """
    Read a POI pattern file, a JSON list of ``{"sbj", "op", "obj"}``

    Returns
    -------
    patterns : list of PoiPattern
    """
    data = read_json(path, stage="schema")
    if not isinstance(data, list):
        raise SchemaError("expected a list of patterns", path=path)
    out = []
    for (i, item) in enumerate(data):
        field = "{}:[{}]".format(path, i)
        if not isinstance(item, dict):
            raise SchemaError("expected an object", path=field)
        for key in ("sbj", "op", "obj"):
            if not isinstance(item.get(key), str):
                raise SchemaError("expected a string", path=field + "." + key)
        try:
            out.append(PoiPattern(item["sbj"], item["op"], item["obj"]))
        except ValueError as e:
            raise SchemaError(str(e), path=field)
    return out


def default_patterns():
    """Patterns named by ``PATHS.poi_patterns``, or the packaged ones."""
    return load_patterns(options["PATHS.poi_patterns"] or DEFAULT_PATTERNS_FILE)
