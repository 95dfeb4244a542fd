import io
import json
import os
import tempfile
import unittest

from provhunt.ingest import (
    AuditEvent, EventReader, events_from_text, parse_stream, write_events
)
from provhunt.util import ParseError
from provhunt.vocab import EdgeOp, EntityKind, EventDir


def _line(**kw):
    rec = {"ts": 1, "sbj_id": "p1", "sbj_name": "bash", "obj_id": "f1",
           "obj_name": "/etc/passwd", "obj_kind": "file", "op": "read",
           "dir": "in"}
    rec.update(kw)
    return json.dumps(rec)


class TestParse(unittest.TestCase):

    def test_three_valid_lines(self):
        text = "\n".join(_line(ts=t) for t in [3, 1, 2])
        events = events_from_text(text)
        self.assertEqual([e.ts for e in events], [3, 1, 2])
        self.assertIsInstance(events[0], AuditEvent)
        self.assertIs(events[0].op, EdgeOp.READ)
        self.assertIs(events[0].obj_kind, EntityKind.FILE)
        self.assertIs(events[0].dir, EventDir.OBJ_TO_SBJ)

    def test_netflow_without_addr_skipped(self):
        bad = _line(obj_kind="netflow", op="send", dir="out",
                    obj_name="sock")
        good = _line(obj_kind="netflow", op="send", dir="out",
                     obj_name="sock", obj_addr="8.8.8.8:53")
        reader = EventReader(io.BytesIO((bad + "\n" + good).encode()))
        events = list(reader)
        self.assertEqual(len(events), 1)
        self.assertEqual(events[0].obj_addr, "8.8.8.8:53")
        self.assertEqual(reader.n_skipped, 1)
        self.assertEqual(reader.errors[0][0], 1)
        self.assertIn("obj_addr", reader.errors[0][1])

    def test_empty_source(self):
        reader = EventReader(io.BytesIO(b""))
        self.assertEqual(list(reader), [])
        self.assertEqual(reader.errors, [])

    def test_malformed_lines(self):
        lines = [
            "{not json",
            _line(ts=-1),
            _line(ts=True),
            _line(op="fork"),
            _line(op="bogus"),
            _line(dir="sideways"),
            json.dumps([1, 2]),
            _line(obj_addr="1.2.3.4"),
            _line(ts=9),
        ]
        payload = "\n".join(lines).encode() + b"\n\xff\xfe\n"
        reader = EventReader(io.BytesIO(payload))
        events = list(reader)
        self.assertEqual([e.ts for e in events], [9])
        self.assertEqual([n for (n, _) in reader.errors],
                         [1, 2, 3, 4, 5, 6, 7, 8, 10])

    def test_blank_lines_ignored(self):
        reader = EventReader(io.StringIO("\n" + _line() + "\n\n"))
        self.assertEqual(len(list(reader)), 1)
        self.assertEqual(reader.n_skipped, 0)

    def test_unreadable_source(self):
        with tempfile.TemporaryDirectory() as d:
            missing = os.path.join(d, "missing.jsonl")
            self.assertRaises(ParseError, list, parse_stream(missing))

    def test_write_then_parse(self):
        text = "\n".join([
            _line(ts=5),
            _line(ts=6, obj_kind="netflow", op="connect", dir="out",
                  obj_id="n1", obj_name="8.8.8.8", obj_addr="8.8.8.8"),
        ])
        events = events_from_text(text)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "out", "events.jsonl")
            self.assertEqual(write_events(events, path), 2)
            again = list(parse_stream(path))
        self.assertEqual(again, events)
