"""
Normalized JSONL audit events and the streaming reader.
"""
import collections
import io
import json
import os

from ..config import setup_logger
from ..util import ParseError, _ensure_dir
from ..vocab import EdgeOp, EntityKind, EventDir, ops_for_kind, parse_address

LOGGER = setup_logger(__name__)

_REQUIRED = ["ts", "sbj_id", "sbj_name", "obj_id", "obj_name", "obj_kind",
             "op", "dir"]


class AuditEvent(collections.namedtuple(
        "AuditEvent", _REQUIRED + ["obj_addr"], defaults=(None,))):
    """
    One ``<sbj, op, obj, ts>`` record. The subject is always a process.
    """
    __slots__ = ()

    @classmethod
    def from_record(cls, rec):
        """
        Validate a decoded JSON object; raises ValueError with the reason.
        """
        if not isinstance(rec, dict):
            raise ValueError("event must be a JSON object")
        missing = [f for f in _REQUIRED if f not in rec]
        if missing:
            raise ValueError("missing field(s) {}".format(", ".join(missing)))

        ts = rec["ts"]
        if isinstance(ts, bool) or not isinstance(ts, int) or ts < 0:
            raise ValueError("ts must be a non-negative integer")
        for field in ["sbj_id", "sbj_name", "obj_id", "obj_name"]:
            if not isinstance(rec[field], str):
                raise ValueError("{} must be a string".format(field))
        if not rec["sbj_id"] or not rec["obj_id"]:
            raise ValueError("entity ids must be non-empty")

        try:
            kind = EntityKind(rec["obj_kind"])
        except ValueError:
            raise ValueError("unknown obj_kind {!r}".format(rec["obj_kind"]))
        try:
            op = EdgeOp(rec["op"])
        except ValueError:
            raise ValueError("unknown op {!r}".format(rec["op"]))
        try:
            direction = EventDir(rec["dir"])
        except ValueError:
            raise ValueError("dir must be 'out' or 'in'")

        addr = rec.get("obj_addr")
        if kind is EntityKind.NETFLOW:
            if addr is None or parse_address(addr) is None:
                raise ValueError("netflow object needs a valid obj_addr")
        elif addr is not None:
            raise ValueError("obj_addr is only allowed on netflow objects")
        if kind is not EntityKind.NETFLOW and not rec["obj_name"]:
            raise ValueError("obj_name must be non-empty")
        if not rec["sbj_name"]:
            raise ValueError("sbj_name must be non-empty")
        if op not in ops_for_kind(kind):
            msg = "op {} is not legal between a process and a {}"
            raise ValueError(msg.format(op.value, kind.value))

        return cls(ts, rec["sbj_id"], rec["sbj_name"], rec["obj_id"],
                   rec["obj_name"], kind, op, direction, addr)

    def to_record(self):
        rec = {
            "ts": self.ts, "sbj_id": self.sbj_id, "sbj_name": self.sbj_name,
            "obj_id": self.obj_id, "obj_name": self.obj_name,
            "obj_kind": self.obj_kind.value, "op": self.op.value,
            "dir": self.dir.value,
        }
        if self.obj_addr is not None:
            rec["obj_addr"] = self.obj_addr
        return rec


class EventReader(object):
    """
    Iterate the events of a JSONL source, skipping malformed lines

    Parameters
    ----------
    source : str or file-like
        A path, a binary stream or a text stream.

    Attributes
    ----------
    errors : list of (int, str)
        Line number and reason of every skipped line.
    """

    def __init__(self, source):
        self.source = source
        self.errors = []
        self.n_events = 0

    @property
    def n_skipped(self):
        return len(self.errors)

    def _open(self):
        if isinstance(self.source, str):
            try:
                return open(self.source, "rb"), True
            except OSError as e:
                msg = "cannot read event source {}: {}"
                raise ParseError(msg.format(self.source, e))
        return self.source, False

    def _skip(self, lineno, reason):
        self.errors.append((lineno, reason))
        LOGGER.warning("line={} skipped reason={}".format(lineno, reason))

    def __iter__(self):
        stream, close = self._open()
        try:
            for (lineno, raw) in enumerate(stream, 1):
                if isinstance(raw, bytes):
                    try:
                        raw = raw.decode("utf-8")
                    except UnicodeDecodeError as e:
                        self._skip(lineno, "invalid UTF-8 ({})".format(e))
                        continue
                line = raw.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except ValueError as e:
                    self._skip(lineno, "invalid JSON ({})".format(e))
                    continue
                try:
                    event = AuditEvent.from_record(rec)
                except ValueError as e:
                    self._skip(lineno, str(e))
                    continue
                self.n_events += 1
                yield event
        except OSError as e:
            raise ParseError("event source became unreadable: {}".format(e))
        finally:
            if close:
                stream.close()


def parse_stream(source):
    """
    Yield the valid events of a JSONL source in file order.

    Malformed lines are logged with their line number and skipped; only an
    unreadable source raises ``ParseError``.
    """
    return iter(EventReader(source))


def write_events(events, dest):
    """Write events as JSONL to a path or a text stream; returns the count."""
    if isinstance(dest, str):
        _ensure_dir(os.path.dirname(os.path.abspath(dest)))
        with open(dest, "w", encoding="utf-8") as f:
            return write_events(events, f)

    n = 0
    for ev in events:
        dest.write(json.dumps(ev.to_record()))
        dest.write("\n")
        n += 1
    return n


def events_from_text(text):
    """Parse JSONL held in a string; convenient for small fixtures."""
    return list(parse_stream(io.StringIO(text)))
