from .core import (
    AuditEvent, EventReader, parse_stream, write_events, events_from_text
)
from .dedup import DedupStats, dedup, dedup_s1, dedup_s2, dedup_streams

__all__ = [
    "AuditEvent", "EventReader", "parse_stream", "write_events",
    "events_from_text", "DedupStats", "dedup", "dedup_s1", "dedup_s2",
    "dedup_streams"
]
