import collections
import random
import unittest
import warnings

from provhunt.ingest import AuditEvent
from provhunt.ppg import NodeView, Ppg
from provhunt.querykit import AttrGraph
from provhunt.sampler import (
    SamplingConfig, coverage_noise, coverage_noise_summary, rule_allows,
    sample
)
from provhunt.util import ProvHuntError
from provhunt.vocab import AbsType as A, EdgeOp as E, EntityKind, EventDir

_NAMES = {
    "p": ["bash", "sh", "dash", "zsh", "firefox", "sshd", "systemd", "vim",
          "mystery", "nginx"],
    "f": ["/tmp/a", "/etc/passwd", "/usr/lib/libc.so", "/home/u/doc.txt",
          "/var/log/syslog", "/usr/bin/ls", "/etc/hosts", "/tmp/b"],
    "n": ["8.8.8.8", "10.0.0.5", "53.192.68.50"],
}


def _ppg(rows, cap=16):
    """rows: (sbj_id, sbj_name, op, obj_id, obj_name)"""
    g = Ppg(sparse_queue_cap=cap)
    for (ts, (sid, sname, op, oid, oname)) in enumerate(rows):
        kind = {"p": EntityKind.PROCESS, "f": EntityKind.FILE,
                "n": EntityKind.NETFLOW}[oid[0]]
        addr = oname if kind is EntityKind.NETFLOW else None
        g.add_event(AuditEvent(1000 + ts, sid, sname, oid, oname, kind, op,
                               op.default_dir, addr))
    return g


def _random_ppg(rng, n_events):
    rows = []
    names = {}

    def pick(prefix, count):
        ident = "{}{}".format(prefix, rng.randrange(count))
        if ident not in names:
            names[ident] = rng.choice(_NAMES[prefix])
        return ident

    file_ops = [E.READ, E.WRITE, E.MODIFY, E.LOAD, E.RENAME, E.CREATE]
    for _ in range(n_events):
        sbj = pick("p", 25)
        r = rng.random()
        if r < 0.2:
            obj, op = pick("p", 25), rng.choice([E.FORK, E.MODIFY])
            if obj == sbj:
                continue
        elif r < 0.35:
            obj, op = pick("n", 6), rng.choice([E.SEND, E.RECV, E.CONNECT])
        else:
            obj, op = pick("f", 60), rng.choice(file_ops)
        rows.append((sbj, names[sbj], op, obj, names[obj]))
    return _ppg(rows, cap=rng.choice([2, 4, 16]))


def naive_sample(g, poi, pois, k):
    inc = collections.defaultdict(list)
    out = collections.defaultdict(list)
    for e in g.edges():
        if e.dir is EventDir.SBJ_TO_OBJ:
            src, dst = e.sbj, e.obj
        else:
            src, dst = e.obj, e.sbj
        out[src].append((e.ts, dst, e.op))
        inc[dst].append((e.ts, src, e.op))

    seen = {poi}
    frontier = [(poi, 0)]
    i = 0
    while i < len(frontier):
        v, depth = frontier[i]
        i += 1
        walk = sorted(inc[v], key=lambda t: -t[0]) + \
            sorted(out[v], key=lambda t: t[0])
        passing = collections.OrderedDict()
        for (_, u, op) in walk:
            if rule_allows(g.node_view(v), g.node_view(u), op):
                passing[u] = passing.get(u, False) or op is E.FORK
        for (u, fork) in passing.items():
            if u in seen:
                continue
            seen.add(u)
            if u in pois:
                frontier.append((u, 0))
            elif fork:
                frontier.append((u, depth))
            elif depth < k - 1:
                frontier.append((u, depth + 1))
    return seen


class TestRules(unittest.TestCase):

    def test_examples(self):
        V = NodeView
        self.assertIsNone(rule_allows(V(A.WEB_PROCESS, True),
                                      A.PUBLIC_NETFLOW, E.SEND))
        self.assertEqual(rule_allows(V(A.UTIL_PROCESS, False),
                                     A.PUBLIC_NETFLOW, E.SEND), "R2")
        self.assertIsNone(rule_allows(V(A.SYS_FILE, True), A.USR_PROCESS,
                                      E.READ))
        self.assertEqual(rule_allows(V(A.SYS_FILE, True), A.USR_PROCESS,
                                     E.WRITE), "R8")
        for p in [A.SYS_PROCESS, A.WEB_PROCESS, A.UNKNOWN_PROCESS]:
            self.assertEqual(rule_allows(V(A.USR_FILE, False), p, E.READ),
                             "R9")

    def test_each_rule(self):
        V = NodeView
        cases = [
            (V(A.UTIL_PROCESS, True), A.PRIVATE_NETFLOW, E.RECV, "R1"),
            (V(A.SYS_PROCESS, False), A.PUBLIC_NETFLOW, E.RECV, "R2"),
            (V(A.USR_PROCESS, False), A.TMP_FILE, E.READ, "R3"),
            (V(A.USR_PROCESS, False), A.PUBLIC_NETFLOW, E.CONNECT, "R3"),
            (V(A.USR_PROCESS, False), A.SERV_PROCESS, E.FORK, "R4"),
            (V(A.UTIL_PROCESS, True), A.LIB_FILE, E.RENAME, "R5"),
            (V(A.UTIL_PROCESS, True), A.SYS_FILE, E.WRITE, "R5"),
            (V(A.UTIL_PROCESS, True), A.SERV_PROCESS, E.MODIFY, "R6"),
            (V(A.WEB_PROCESS, True), A.CFG_FILE, E.READ, "R7"),
            (V(A.CFG_FILE, True), A.UNKNOWN_PROCESS, E.LINK, "R8"),
            (V(A.TMP_FILE, False), A.UTIL_PROCESS, E.WRITE, "R9"),
            (V(A.PUBLIC_NETFLOW, False), A.WEB_PROCESS, E.SEND, "R10"),
            (V(A.PRIVATE_NETFLOW, True), A.UTIL_PROCESS, E.RECV, "R10"),
        ]
        for (v, u, op, want) in cases:
            self.assertEqual(rule_allows(v, u, op), want, (v, u, op))

    def test_rejections(self):
        V = NodeView
        cases = [
            (V(A.WEB_PROCESS, True), A.PUBLIC_NETFLOW, E.RECV),
            (V(A.UTIL_PROCESS, False), A.UNKNOWN_FILE, E.WRITE),
            (V(A.UTIL_PROCESS, True), A.LIB_FILE, E.READ),
            (V(A.UTIL_PROCESS, True), A.TMP_FILE, E.WRITE),
            (V(A.UTIL_PROCESS, True), A.SERV_PROCESS, E.FORK),
            (V(A.UTIL_PROCESS, True), A.USR_PROCESS, E.MODIFY),
            (V(A.USR_FILE, True), A.UTIL_PROCESS, E.WRITE),
            (V(A.LIB_FILE, True), A.UTIL_PROCESS, E.LOAD),
            (V(A.TMP_FILE, False), A.PUBLIC_NETFLOW, E.READ),
            (V(A.PUBLIC_NETFLOW, False), A.UTIL_PROCESS, E.CONNECT),
        ]
        for (v, u, op) in cases:
            self.assertIsNone(rule_allows(v, u, op), (v, u, op))

    def test_start_counts_as_connect(self):
        v = NodeView(A.UTIL_PROCESS, False)
        self.assertEqual(rule_allows(v, A.PUBLIC_NETFLOW, E.START), "R3")

    def test_all_rule_set(self):
        v = NodeView(A.WEB_PROCESS, True)
        self.assertEqual(rule_allows(v, A.PUBLIC_NETFLOW, E.SEND, "all"),
                         "any")
        self.assertRaises(ValueError, rule_allows, v, A.PUBLIC_NETFLOW,
                          E.SEND, "bogus")


class TestSample(unittest.TestCase):

    def chain(self):
        return _ppg([
            ("p0", "bash", E.FORK, "p1", "sh"),
            ("p1", "sh", E.FORK, "p2", "dash"),
            ("p2", "dash", E.FORK, "p3", "zsh"),
            ("p3", "zsh", E.WRITE, "f0", "/tmp/f"),
            ("p9", "vim", E.READ, "f0", "/tmp/f"),
        ])

    def test_fork_chain_is_free(self):
        g = self.chain()
        (tg,) = sample(g, [g.node_index("p0")], SamplingConfig(k=1))
        want = sorted(g.node_index(x) for x in ["p0", "p1", "p2", "p3", "f0"])
        self.assertEqual(tg.ppg_nodes(), want)
        self.assertEqual(tg.n_nodes, 5)
        self.assertEqual(tg.n_edges, 4)
        self.assertEqual(tg.rule_hits, {"R3": 1, "R4": 3})
        self.assertEqual(tg.id, "tg-0000")
        self.assertFalse(tg.truncated)

    def test_hop_budget(self):
        g = self.chain()
        (tg,) = sample(g, [g.node_index("p0")], SamplingConfig(k=2))
        self.assertIn(g.node_index("p9"), tg.ppg_nodes())

    def test_isolated_poi(self):
        g = _ppg([("p0", "bash", E.WRITE, "f0", "/var/log/app.log")])
        (tg,) = sample(g, [g.node_index("p0")], SamplingConfig(k=3))
        self.assertEqual(tg.ppg_nodes(), [g.node_index("p0")])
        self.assertEqual(tg.n_edges, 0)

    def test_overlapping_merge(self):
        g = _ppg([
            ("p0", "bash", E.WRITE, "f0", "/tmp/shared"),
            ("p1", "vim", E.READ, "f0", "/tmp/shared"),
            ("p2", "sh", E.WRITE, "f1", "/tmp/other"),
        ])
        seeds = [g.node_index("p0"), g.node_index("p1"), g.node_index("p2")]
        graphs = sample(g, seeds, SamplingConfig(k=1))
        self.assertEqual(len(graphs), 2)
        self.assertEqual(graphs[0].seeds, seeds[:2])
        self.assertEqual(graphs[1].seeds, seeds[2:])
        unmerged = sample(g, seeds, SamplingConfig(k=1, merge=False))
        self.assertEqual(len(unmerged), 3)

    def test_poi_reset(self):
        g = _ppg([
            ("pa", "bash", E.WRITE, "f0", "/tmp/drop"),
            ("pb", "sh", E.READ, "f0", "/tmp/drop"),
            ("pb", "sh", E.WRITE, "f1", "/tmp/next"),
        ])
        seeds = [g.node_index("pa"), g.node_index("pb")]
        f1 = g.node_index("f1")
        reset = sample(g, seeds, SamplingConfig(k=2, merge=False))
        self.assertIn(f1, reset[0].ppg_nodes())
        plain = sample(g, seeds, SamplingConfig(k=2, merge=False,
                                                poi_reset=False))
        self.assertNotIn(f1, plain[0].ppg_nodes())

    def test_identical_names_fold(self):
        g = _ppg([
            ("p0", "bash", E.FORK, "p1", "/bin/bash"),
            ("p1", "/bin/bash", E.WRITE, "f0", "/tmp/x"),
        ])
        (tg,) = sample(g, [g.node_index("p0")], SamplingConfig(k=2))
        self.assertEqual(tg.n_nodes, 2)
        self.assertEqual(sorted(tg.sources[0]), [0, 1])
        self.assertEqual(tg.provenance()["ppg_nodes"][0], [0, 1])

    def test_truncation(self):
        g = self.chain()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            (tg,) = sample(g, [g.node_index("p0")],
                           SamplingConfig(k=1, max_nodes=2))
        self.assertTrue(tg.truncated)
        self.assertEqual(tg.n_nodes, 2)
        self.assertTrue(any("truncated" in str(w.message) for w in caught))

    def test_errors(self):
        g = self.chain()
        self.assertRaises(ProvHuntError, sample, g, [99], SamplingConfig())
        self.assertRaises(ValueError, sample, g, [], SamplingConfig())
        self.assertRaises(ValueError, SamplingConfig, k=0)
        self.assertRaises(ValueError, SamplingConfig, rules="nope")

    def test_snapshot_is_stable(self):
        g = self.chain()
        snap = g.snapshot()
        before = sample(snap, [0], SamplingConfig(k=2))[0].ppg_nodes()
        g.add_event(AuditEvent(5000, "p0", "bash", "f7", "/tmp/late",
                               EntityKind.FILE, E.WRITE, EventDir.SBJ_TO_OBJ))
        after = sample(snap, [0], SamplingConfig(k=2))[0].ppg_nodes()
        self.assertEqual(before, after)

    def test_against_naive_bfs(self):
        rng = random.Random(11)
        for trial in range(200):
            g = _random_ppg(rng, rng.randint(20, 150))
            self.assertLessEqual(g.n_nodes, 200)
            procs = g.process_nodes()
            pois = rng.sample(procs, min(len(procs), rng.randint(1, 3)))
            k = rng.randint(1, 3)
            graphs = sample(g, pois, SamplingConfig(k=k, merge=False))
            self.assertEqual(len(graphs), len(pois))
            for (poi, tg) in zip(pois, graphs):
                want = naive_sample(g, poi, set(pois), k)
                self.assertEqual(set(tg.ppg_nodes()), want,
                                 (trial, poi, k))

    def test_soundness(self):
        rng = random.Random(5)
        for _ in range(30):
            g = _random_ppg(rng, 120)
            flows = collections.defaultdict(set)
            for e in g.edges():
                if e.dir is EventDir.SBJ_TO_OBJ:
                    flows[(e.sbj, e.obj)].add(e.op)
                else:
                    flows[(e.obj, e.sbj)].add(e.op)
            seeds = rng.sample(g.process_nodes(), 2)
            graphs = sample(g, seeds, SamplingConfig(k=2))
            placed = [s for tg in graphs for s in tg.seeds]
            self.assertEqual(sorted(placed), sorted(seeds))
            for tg in graphs:
                for e in tg.graph.edges:
                    ok = False
                    for a in tg.sources[e.src]:
                        for b in tg.sources[e.dst]:
                            if e.op not in flows[(a, b)]:
                                continue
                            va, vb = g.node_view(a), g.node_view(b)
                            if rule_allows(va, vb, e.op) or \
                                    rule_allows(vb, va, e.op):
                                ok = True
                    self.assertTrue(ok, e)


def _query(n):
    g = AttrGraph("q")
    for i in range(n):
        g.add_node("/tmp/q{}".format(i), A.TMP_FILE)
    for i in range(n - 1):
        g.add_edge(i, i + 1, E.WRITE)
    return g


class TestCoverage(unittest.TestCase):

    def test_identical(self):
        q = _query(8)
        self.assertEqual(coverage_noise(q.copy(), q),
                         {"node_cr": 1.0, "edge_cr": 1.0, "node_nr": 0.0,
                          "edge_nr": 0.0})

    def test_two_extra_nodes(self):
        q = _query(8)
        s = q.copy()
        s.add_node("/tmp/extra1", A.TMP_FILE)
        s.add_node("/tmp/extra2", A.TMP_FILE)
        rates = coverage_noise(s, q)
        self.assertAlmostEqual(rates["node_nr"], 0.2)
        self.assertEqual(rates["node_cr"], 1.0)
        self.assertEqual(rates["edge_nr"], 0.0)

    def test_disjoint(self):
        q = _query(4)
        s = AttrGraph()
        s.add_node("/tmp/q0", A.USR_FILE)
        s.add_node("bash", A.UTIL_PROCESS)
        s.add_edge(1, 0, E.WRITE)
        rates = coverage_noise(s, q)
        self.assertEqual(rates["node_cr"], 0.0)
        self.assertEqual(rates["node_nr"], 1.0)
        self.assertEqual(rates["edge_cr"], 0.0)
        self.assertEqual(rates["edge_nr"], 1.0)

    def test_name_normalization(self):
        q = AttrGraph()
        q.add_node("C:\\Users\\Bob\\GUP.exe", A.USR_PROCESS)
        s = AttrGraph()
        s.add_node("gup.exe", A.USR_PROCESS)
        self.assertEqual(coverage_noise(s, q)["node_cr"], 1.0)

    def test_empty_query(self):
        self.assertRaises(ValueError, coverage_noise, _query(2), AttrGraph())

    def test_summary(self):
        q = _query(4)
        summary = coverage_noise_summary([(q, q), (AttrGraph(), q)])
        self.assertEqual(summary["n"], 2)
        self.assertAlmostEqual(summary["node_cr"], 0.5)
        self.assertAlmostEqual(summary["node_nr"], 0.0)
