import random
import unittest

from provhunt.ingest import (
    AuditEvent, DedupStats, dedup, dedup_s1, dedup_s2, dedup_streams
)
from provhunt.vocab import EdgeOp, EntityKind, EventDir


def _ev(ts, op, obj, sbj="p1"):
    if op in (EdgeOp.SEND, EdgeOp.RECV, EdgeOp.CONNECT):
        kind, addr = EntityKind.NETFLOW, "8.8.8.8"
    elif op is EdgeOp.FORK:
        kind, addr = EntityKind.PROCESS, None
    else:
        kind, addr = EntityKind.FILE, None
    return AuditEvent(ts, sbj, "bash", obj, obj, kind, op, op.default_dir,
                      addr)


def _s1_reference(events):
    # repeatedly delete the leftmost event whose template equals one of the
    # two events before it
    out = list(events)
    key = lambda e: (e.sbj_id, e.op, e.obj_id, e.dir)
    changed = True
    while changed:
        changed = False
        for i in range(1, len(out)):
            prev = [key(out[j]) for j in range(max(0, i - 2), i)]
            if key(out[i]) in prev:
                del out[i]
                changed = True
                break
    return out


def _s2_reference(events, window):
    out = []
    if not events:
        return out
    origin = events[0].ts
    for (i, e) in enumerate(events):
        if e.op in (EdgeOp.SEND, EdgeOp.RECV):
            w = (e.ts - origin) // window
            dup = any(
                p.sbj_id == e.sbj_id and p.obj_id == e.obj_id and
                p.op is e.op and (p.ts - origin) // window == w
                for p in events[:i]
            )
            if dup:
                continue
        out.append(e)
    return out


def _random_stream(rng, n):
    ops = [EdgeOp.READ, EdgeOp.WRITE, EdgeOp.SEND, EdgeOp.RECV, EdgeOp.FORK]
    ts = 0
    out = []
    for _ in range(n):
        ts += rng.choice([0, 1, 1000, 60000, 200000])
        op = rng.choice(ops)
        obj = rng.choice(["o1", "o2", "o3"])
        out.append(_ev(ts, op, obj, sbj=rng.choice(["p1", "p2"])))
    return out


class TestS1(unittest.TestCase):

    def test_consecutive_duplicates(self):
        events = [_ev(t, EdgeOp.READ, "f1") for t in range(3)]
        kept, removed = dedup_s1(events)
        self.assertEqual(kept, events[:1])
        self.assertEqual(removed, 2)

    def test_read_write_pairs(self):
        events = [_ev(0, EdgeOp.READ, "f1"), _ev(1, EdgeOp.WRITE, "f2"),
                  _ev(2, EdgeOp.READ, "f1"), _ev(3, EdgeOp.WRITE, "f2"),
                  _ev(4, EdgeOp.READ, "f1")]
        kept, removed = dedup_s1(events)
        self.assertEqual(kept, events[:2])
        self.assertEqual(removed, 3)

    def test_no_run(self):
        events = [_ev(0, EdgeOp.READ, "f1"), _ev(1, EdgeOp.WRITE, "f2"),
                  _ev(2, EdgeOp.FORK, "p3")]
        kept, removed = dedup_s1(events)
        self.assertEqual(kept, events)
        self.assertEqual(removed, 0)

    def test_direction_distinguishes_templates(self):
        a = _ev(0, EdgeOp.READ, "f1")
        b = a._replace(ts=1, dir=EventDir.SBJ_TO_OBJ)
        self.assertEqual(dedup_s1([a, b])[1], 0)

    def test_against_reference(self):
        rng = random.Random(11)
        for _ in range(10000):
            events = _random_stream(rng, rng.randint(0, 20))
            kept, removed = dedup_s1(events)
            self.assertEqual(kept, _s1_reference(events))
            self.assertEqual(removed, len(events) - len(kept))
            self.assertEqual(dedup_s1(kept), (kept, 0))


class TestS2(unittest.TestCase):

    def test_single_window(self):
        events = [_ev(i * 5000, EdgeOp.SEND, "sock1") for i in range(10)]
        kept, removed = dedup_s2(events, 300000)
        self.assertEqual(len(kept), 1)
        self.assertEqual(removed, 9)

    def test_distinct_windows(self):
        events = [_ev(0, EdgeOp.SEND, "sock1"),
                  _ev(6 * 60000, EdgeOp.SEND, "sock1")]
        self.assertEqual(dedup_s2(events, 300000), (events, 0))

    def test_send_and_recv_distinct(self):
        events = [_ev(0, EdgeOp.SEND, "sock1"), _ev(10, EdgeOp.RECV, "sock1")]
        self.assertEqual(dedup_s2(events, 300000), (events, 0))

    def test_non_network_untouched(self):
        events = [_ev(i, EdgeOp.READ, "f1") for i in range(4)]
        self.assertEqual(dedup_s2(events, 300000), (events, 0))

    def test_bad_window(self):
        self.assertRaises(ValueError, dedup_s2, [], 0)

    def test_against_reference(self):
        rng = random.Random(5)
        for _ in range(10000):
            events = _random_stream(rng, rng.randint(0, 20))
            window = rng.choice([1000, 300000])
            kept, removed = dedup_s2(events, window)
            self.assertEqual(kept, _s2_reference(events, window))
            self.assertEqual(removed, len(events) - len(kept))
            self.assertEqual(dedup_s2(kept, window), (kept, 0))


class TestDedupStats(unittest.TestCase):

    def test_conservation(self):
        rng = random.Random(3)
        for _ in range(200):
            events = _random_stream(rng, rng.randint(0, 60))
            kept, stats = dedup(events, 300000, s1=True, s2=True)
            self.assertIsInstance(stats, DedupStats)
            self.assertEqual(stats.input_events, len(events))
            self.assertEqual(stats.remaining, len(kept))
            self.assertEqual(
                stats.input_events,
                stats.s1_removed + stats.s2_removed + stats.remaining
            )

    def test_disabled_stages(self):
        events = [_ev(t, EdgeOp.READ, "f1") for t in range(3)]
        kept, stats = dedup(events, 300000, s1=False, s2=False)
        self.assertEqual(kept, events)
        self.assertEqual(stats.as_dict()["remaining"], 3)

    def test_sum(self):
        total = DedupStats(3, 1, 0, 2) + DedupStats(5, 0, 2, 3)
        self.assertEqual(total.as_dict(), {
            "input_events": 8, "s1_removed": 1, "s2_removed": 2,
            "remaining": 5})


class TestStreams(unittest.TestCase):

    def test_state_is_per_stream(self):
        a = [_ev(0, EdgeOp.SEND, "sock1"), _ev(20, EdgeOp.READ, "f1")]
        b = [_ev(10, EdgeOp.SEND, "sock1"), _ev(30, EdgeOp.READ, "f1")]
        kept, stats = dedup_streams([a, b], 300000, s1=True, s2=True)
        self.assertEqual([e.ts for e in kept], [0, 10, 20, 30])
        self.assertEqual(stats.input_events, 4)
        self.assertEqual(stats.remaining, 4)
        together, _ = dedup(sorted(a + b, key=lambda e: e.ts), 300000,
                            s1=True, s2=True)
        self.assertEqual(len(together), 2)

    def test_stats_summed(self):
        rng = random.Random(6)
        streams = [_random_stream(rng, 40) for _ in range(3)]
        kept, stats = dedup_streams(streams, 300000, s1=True, s2=True)
        parts = [dedup(s, 300000, s1=True, s2=True) for s in streams]
        self.assertEqual(stats.as_dict(),
                         (parts[0][1] + parts[1][1] + parts[2][1]).as_dict())
        self.assertEqual(sorted(kept, key=lambda e: e.ts), kept)

    def test_no_streams(self):
        kept, stats = dedup_streams([])
        self.assertEqual(kept, [])
        self.assertEqual(stats.input_events, 0)
