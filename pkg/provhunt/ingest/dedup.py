"""
Event deduplication applied before graph construction.

S1 drops repeated event templates: a template that equals one of the two
previously kept templates is dropped, which collapses consecutive
duplicates and period-2 alternations such as chunked read/write copies.
S2 keeps one send/recv per (subject, socket, op) in each tumbling window.
"""
import heapq

from ..config import options, setup_logger
from ..vocab import EdgeOp

LOGGER = setup_logger(__name__)

_NET_OPS = frozenset([EdgeOp.SEND, EdgeOp.RECV])


class DedupStats(object):
    __slots__ = ["input_events", "s1_removed", "s2_removed", "remaining"]

    def __init__(self, input_events=0, s1_removed=0, s2_removed=0,
                 remaining=0):
        self.input_events = input_events
        self.s1_removed = s1_removed
        self.s2_removed = s2_removed
        self.remaining = remaining

    def check(self):
        total = self.s1_removed + self.s2_removed + self.remaining
        if total != self.input_events:
            msg = "dedup counts do not add up: {} + {} + {} != {}"
            raise AssertionError(msg.format(
                self.s1_removed, self.s2_removed, self.remaining,
                self.input_events))
        return self

    def __add__(self, other):
        return DedupStats(
            self.input_events + other.input_events,
            self.s1_removed + other.s1_removed,
            self.s2_removed + other.s2_removed,
            self.remaining + other.remaining,
        )

    def as_dict(self):
        return {name: getattr(self, name) for name in self.__slots__}

    def __repr__(self):
        return "DedupStats({})".format(
            ", ".join("{}={}".format(k, v) for (k, v) in self.as_dict().items())
        )


def _template(ev):
    return (ev.sbj_id, ev.op, ev.obj_id, ev.dir)


def dedup_s1(events):
    """
    Remove repeated single events and repeated event pairs

    Parameters
    ----------
    events : iterable of AuditEvent
        One stream in timestamp order.

    Returns
    -------
    kept : list of AuditEvent
        Order-preserving subsequence of ``events``.

    removed : int
    """
    kept = []
    removed = 0
    last = before_last = None
    for ev in events:
        key = _template(ev)
        if key == last or key == before_last:
            removed += 1
            continue
        kept.append(ev)
        before_last, last = last, key

    return kept, removed


def dedup_s2(events, window_ms=None):
    """
    Keep the first send/recv per (subject, socket, op) in each window

    Parameters
    ----------
    events : iterable of AuditEvent
        Time-ordered stream. Windows are aligned to its first timestamp.

    window_ms : int, optional
        Window length; defaults to ``ingest.window_ms``.

    Returns
    -------
    kept : list of AuditEvent

    removed : int
    """
    if window_ms is None:
        window_ms = options["ingest.window_ms"]
    if window_ms <= 0:
        raise ValueError("window_ms must be positive, got {}".format(window_ms))

    kept = []
    removed = 0
    seen = set()
    origin = None
    for ev in events:
        if origin is None:
            origin = ev.ts
        if ev.op in _NET_OPS:
            key = (ev.sbj_id, ev.obj_id, ev.op, (ev.ts - origin) // window_ms)
            if key in seen:
                removed += 1
                continue
            seen.add(key)
        kept.append(ev)

    return kept, removed


def dedup(events, window_ms=None, s1=None, s2=None):
    """
    Run S1 then S2 over one stream

    Returns
    -------
    kept : list of AuditEvent

    stats : DedupStats
    """
    s1 = options["ingest.s1"] if s1 is None else s1
    s2 = options["ingest.s2"] if s2 is None else s2
    events = list(events)
    stats = DedupStats(input_events=len(events))
    if s1:
        events, stats.s1_removed = dedup_s1(events)
    if s2:
        events, stats.s2_removed = dedup_s2(events, window_ms)
    stats.remaining = len(events)
    LOGGER.info("dedup input={} s1_removed={} s2_removed={}".format(
        stats.input_events, stats.s1_removed, stats.s2_removed))
    return events, stats.check()


def dedup_streams(streams, window_ms=None, s1=None, s2=None):
    """
    Deduplicate each stream on its own, then merge them by timestamp

    S1 history and S2 windows never cross stream boundaries; ties keep the
    order of ``streams``.

    Parameters
    ----------
    streams : iterable of iterable of AuditEvent
        Each one time-ordered.

    Returns
    -------
    kept : list of AuditEvent

    stats : DedupStats
        Summed over the streams.
    """
    parts = []
    stats = DedupStats()
    for events in streams:
        kept, part = dedup(events, window_ms, s1, s2)
        parts.append(kept)
        stats = stats + part
    merged = list(heapq.merge(*parts, key=lambda e: e.ts))
    LOGGER.info("merged {} streams into {} events".format(len(parts),
                                                          len(merged)))
    return merged, stats.check()
