import itertools
import math
import os
import tempfile
import unittest
import warnings

import numpy as np
import numpy.testing as npt

from provhunt.ingest import AuditEvent
from provhunt.ppg import build_ppg
from provhunt.querykit import AttrGraph
from provhunt.reprnet import ReprModel, load_model, save_model
from provhunt.trainer import (
    Adam, TrainConfig, approx_ged, augment, build_corpus, build_pairs,
    contrastive_loss, ged_threshold, mapping_cost, pair_separation,
    perturb_edges, sample_benign_corpus, train
)
from provhunt.util import ProvHuntError
from provhunt.vocab import AbsType, EdgeOp, EntityKind

BASE = 1700000000000
ABS = list(AbsType)
OPS = [EdgeOp.READ, EdgeOp.WRITE, EdgeOp.FORK, EdgeOp.SEND, EdgeOp.LOAD]
FILE_OPS = [EdgeOp.READ, EdgeOp.WRITE, EdgeOp.LOAD, EdgeOp.MODIFY]
NET_OPS = [EdgeOp.SEND, EdgeOp.RECV, EdgeOp.CONNECT]


def clustered_events(seed, n_clusters=6):
    """Disjoint groups of 3 processes, 12 files and 2 private hosts."""
    rng = np.random.default_rng(seed)
    out = []
    ts = BASE
    for c in range(n_clusters):
        procs = [("c{}p{}".format(c, k), "worker{}_{}".format(c, k))
                 for k in range(3)]
        files = [("c{}f{}".format(c, k), "/home/u{}/doc{}.txt".format(c, k))
                 for k in range(12)]
        hosts = ["10.0.{}.{}".format(c, k + 1) for k in range(2)]
        for k in range(2):
            ts += 10
            (pid, pname), (cid, cname) = procs[k], procs[k + 1]
            out.append(AuditEvent(ts, pid, pname, cid, cname,
                                  EntityKind.PROCESS, EdgeOp.FORK,
                                  EdgeOp.FORK.default_dir))
        for (pid, pname) in procs:
            for _ in range(8):
                ts += 10
                if rng.random() < 0.2:
                    host = hosts[rng.integers(2)]
                    op = NET_OPS[rng.integers(len(NET_OPS))]
                    out.append(AuditEvent(ts, pid, pname, "net-" + host,
                                          host + ":443", EntityKind.NETFLOW,
                                          op, op.default_dir, host))
                else:
                    fid, fname = files[rng.integers(len(files))]
                    op = FILE_OPS[rng.integers(len(FILE_OPS))]
                    out.append(AuditEvent(ts, pid, pname, fid, fname,
                                          EntityKind.FILE, op, op.default_dir))
    return out


def random_graph(rng, n, m):
    g = AttrGraph("g")
    for i in range(n):
        g.add_node("n{}".format(i), ABS[rng.integers(len(ABS))])
    for t in range(m):
        a, b = rng.integers(n, size=2)
        if a != b:
            g.add_edge(int(a), int(b), OPS[rng.integers(len(OPS))], t)
    return g


def mixed_graph(rng, n_procs=3, n_objs=9, n_edges=20):
    g = AttrGraph("mixed")
    for i in range(n_procs):
        g.add_node("p{}".format(i), AbsType.USR_PROCESS)
    for i in range(n_objs):
        kind = AbsType.USR_FILE if i % 3 else AbsType.PRIVATE_NETFLOW
        g.add_node("o{}".format(i), kind)
    for t in range(n_edges):
        p = int(rng.integers(n_procs))
        o = n_procs + int(rng.integers(n_objs))
        if g.abs[o] is AbsType.USR_FILE:
            g.add_edge(p, o, EdgeOp.WRITE, t)
        else:
            g.add_edge(p, o, EdgeOp.SEND, t)
    g.add_edge(0, 1, EdgeOp.FORK, 99)
    return g


def exact_ged(a, b):
    best = [math.inf]

    def assign(i, mapping, used):
        if i == a.n_nodes:
            best[0] = min(best[0], mapping_cost(a, b, mapping))
            return
        for j in itertools.chain(range(b.n_nodes), [None]):
            if j is not None and j in used:
                continue
            mapping.append(j)
            if j is not None:
                used.add(j)
            assign(i + 1, mapping, used)
            mapping.pop()
            used.discard(j)

    assign(0, [], set())
    return best[0]


def scalar_loss(pos, negs, tau):
    total = 0.0
    for (p, neg) in zip(pos, negs):
        denom = sum(math.exp(s / tau) for s in neg)
        total += -math.log(math.exp(p / tau) / denom)
    return total / len(pos)


def small_config(**kwargs):
    settings = dict(corpus_size=12, epochs=2, batch=4, lr=0.01,
                    max_negative_scan=11, seed=3)
    settings.update(kwargs)
    return TrainConfig(**settings)


class TestGed(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_identity_is_zero(self):
        for _ in range(30):
            g = random_graph(self.rng, int(self.rng.integers(1, 15)), 30)
            self.assertEqual(approx_ged(g, g), 0.0)

    def test_single_nodes_of_different_type(self):
        a = AttrGraph()
        a.add_node("vim", AbsType.USR_PROCESS)
        b = AttrGraph()
        b.add_node("/etc/passwd", AbsType.CFG_FILE)
        self.assertGreaterEqual(approx_ged(a, b), 1.0)
        self.assertEqual(exact_ged(a, b), 1)

    def test_admissible(self):
        for _ in range(200):
            a = random_graph(self.rng, int(self.rng.integers(1, 7)),
                             int(self.rng.integers(0, 9)))
            b = random_graph(self.rng, int(self.rng.integers(1, 7)),
                             int(self.rng.integers(0, 9)))
            self.assertGreaterEqual(approx_ged(a, b), exact_ged(a, b))

    def test_mapping_cost(self):
        a = AttrGraph()
        a.add_node("x", AbsType.USR_PROCESS)
        a.add_node("y", AbsType.USR_FILE)
        a.add_edge(0, 1, EdgeOp.WRITE)
        # delete both nodes and the edge, insert nothing
        self.assertEqual(mapping_cost(a, AttrGraph(), [None, None]), 3)
        self.assertEqual(mapping_cost(a, a, [0, 1]), 0)
        # swapped: two substitutions, the edge is lost and re-added
        self.assertEqual(mapping_cost(a, a, [1, 0]), 4)
        with self.assertRaises(ValueError):
            mapping_cost(a, a, [0, 0])

    def test_threshold(self):
        a = random_graph(self.rng, 4, 6)
        b = random_graph(self.rng, 7, 12)
        self.assertEqual(ged_threshold(a, b),
                         min(a.n_nodes + a.n_edges, b.n_nodes + b.n_edges))

    def test_empty_rejected(self):
        with self.assertRaises(ValueError):
            approx_ged(AttrGraph(), random_graph(self.rng, 3, 3))


class TestAugment(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(8)

    def test_ratio_zero_is_identity(self):
        g = mixed_graph(self.rng)
        self.assertEqual(augment(g, 0.0, 1), g)

    def test_processes_never_removed(self):
        donors = [mixed_graph(self.rng) for _ in range(4)]
        for seed in range(50):
            g = mixed_graph(self.rng)
            out = augment(g, 0.2, seed, donors=donors)
            self.assertGreater(out.n_nodes, 0)

            def procs(x):
                return [n for (n, a) in zip(x.names, x.abs)
                        if a.kind is EntityKind.PROCESS]

            self.assertEqual(procs(out), procs(g))

    def test_edge_perturbation_bound(self):
        for _ in range(30):
            g = mixed_graph(self.rng)
            out = perturb_edges(g, 0.2, self.rng)
            self.assertEqual(out.names, g.names)
            before = {(e.src, e.dst, e.op) for e in g.edges}
            after = {(e.src, e.dst, e.op) for e in out.edges}
            bound = math.ceil(0.2 * g.n_edges)
            self.assertLessEqual(len(before ^ after), bound)
            self.assertLessEqual(abs(out.n_edges - g.n_edges), bound)
            for (s, d, _) in before ^ after:
                kinds = {g.abs[s].kind, g.abs[d].kind}
                self.assertIn(EntityKind.PROCESS, kinds)
                self.assertEqual(len(kinds), 2)

    def test_seeded(self):
        g = mixed_graph(self.rng)
        self.assertEqual(augment(g, 0.2, 4), augment(g, 0.2, 4))

    def test_bad_ratio(self):
        with self.assertRaises(ValueError):
            augment(mixed_graph(self.rng), 1.0, 0)


class TestLoss(unittest.TestCase):

    def test_worked_example(self):
        loss, d_pos, d_negs = contrastive_loss([1.0], [[-1.0]], 0.1)
        self.assertAlmostEqual(loss, -20.0, places=12)
        self.assertAlmostEqual(d_pos[0], -10.0)
        self.assertAlmostEqual(d_negs[0][0], 10.0)

    def test_equal_scores(self):
        self.assertAlmostEqual(contrastive_loss([0.4], [[0.4]], 0.1)[0], 0.0,
                               places=12)

    def test_monotone_in_positive(self):
        losses = [contrastive_loss([p], [[0.2, -0.3]], 0.1)[0]
                  for p in np.linspace(-1, 1, 21)]
        self.assertTrue(all(np.diff(losses) < 0))

    def test_scalar_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            tau = float(rng.uniform(0.05, 1.0))
            pos = rng.uniform(-1, 1, n)
            negs = [rng.uniform(-1, 1, int(rng.integers(1, 4)))
                    for _ in range(n)]
            loss = contrastive_loss(pos, negs, tau)[0]
            ref = scalar_loss(pos, negs, tau)
            self.assertAlmostEqual(loss, ref, delta=1e-9 * max(1, abs(ref)))

    def test_gradients(self):
        rng = np.random.default_rng(1)
        pos = rng.uniform(-1, 1, 3)
        negs = [rng.uniform(-1, 1, 2) for _ in range(3)]
        _, d_pos, d_negs = contrastive_loss(pos, negs, 0.3)
        h = 1e-6
        for i in range(3):
            up, down = pos.copy(), pos.copy()
            up[i] += h
            down[i] -= h
            fd = (contrastive_loss(up, negs, 0.3)[0] -
                  contrastive_loss(down, negs, 0.3)[0]) / (2 * h)
            self.assertAlmostEqual(d_pos[i], fd, places=6)
            for k in range(2):
                up = [n.copy() for n in negs]
                down = [n.copy() for n in negs]
                up[i][k] += h
                down[i][k] -= h
                fd = (contrastive_loss(pos, up, 0.3)[0] -
                      contrastive_loss(pos, down, 0.3)[0]) / (2 * h)
                self.assertAlmostEqual(d_negs[i][k], fd, places=6)

    def test_missing_negatives(self):
        with self.assertRaises(ProvHuntError):
            contrastive_loss([0.5, 0.1], [[0.2], []], 0.1)


class TestCorpus(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.g = build_ppg(clustered_events(2))

    def test_sizes_and_count(self):
        cfg = small_config()
        graphs = sample_benign_corpus(self.g, cfg)
        self.assertEqual(len(graphs), cfg.corpus_size)
        for g in graphs:
            self.assertGreaterEqual(g.n_nodes, 10)
            self.assertLessEqual(g.n_nodes, 30)

    def test_seeded(self):
        a = sample_benign_corpus(self.g, small_config())
        b = sample_benign_corpus(self.g, small_config())
        self.assertEqual([g.to_dict() for g in a], [g.to_dict() for g in b])

    def test_bounded_retries(self):
        cfg = small_config(min_nodes=25, max_nodes=30, max_attempts=2)
        with self.assertRaises(ProvHuntError):
            sample_benign_corpus(self.g, cfg)

    def test_pairs(self):
        cfg = small_config()
        corpus = build_corpus(self.g, cfg)
        self.assertEqual(len(corpus.positives), len(corpus))
        self.assertEqual([i for (i, _) in corpus.positives],
                         list(range(len(corpus))))
        self.assertEqual(len(corpus.negatives), len(corpus))
        for (i, j) in corpus.negatives:
            self.assertNotEqual(i, j)
            a, b = corpus.graphs[i], corpus.graphs[j]
            passes = corpus.ged[(i, j)] > ged_threshold(a, b)
            self.assertTrue(passes or (i, j) in corpus.relaxed)

    def test_pairs_seeded(self):
        a = build_corpus(self.g, small_config())
        b = build_corpus(self.g, small_config())
        self.assertEqual(a.negatives, b.negatives)
        self.assertEqual([p.to_dict() for (_, p) in a.positives],
                         [p.to_dict() for (_, p) in b.positives])

    def test_relaxed_negatives_warn(self):
        g = mixed_graph(np.random.default_rng(0))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            corpus = build_pairs([g, g.copy(), g.copy()], small_config())
        self.assertEqual(len(corpus.relaxed), 3)
        self.assertGreaterEqual(len(caught), 3)

    def test_too_few_graphs(self):
        with self.assertRaises(ProvHuntError):
            build_pairs([mixed_graph(np.random.default_rng(0))],
                        small_config())


class TestTrain(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.corpus = build_corpus(build_ppg(clustered_events(4)),
                                  small_config())

    def test_config(self):
        cfg = TrainConfig(tau=0.5)
        self.assertEqual(cfg.tau, 0.5)
        self.assertEqual(cfg.batch, 16)
        self.assertEqual(cfg.perturb_ratio, 0.2)
        with self.assertRaises(ValueError):
            TrainConfig(tau=0.0)
        with self.assertRaises(ValueError):
            TrainConfig(perturb_ratio=1.0)
        with self.assertRaises(ValueError):
            TrainConfig(alpha=1)

    def test_adam(self):
        x = {"x": np.array([3.0, -2.0])}
        opt = Adam(x, lr=0.1)
        opt.step({"x": 2 * x["x"]})
        # the first bias-corrected step moves each coordinate by lr
        npt.assert_allclose(x["x"], [2.9, -1.9])
        for _ in range(500):
            opt.step({"x": 2 * x["x"]})
        self.assertLess(np.abs(x["x"]).max(), 0.05)

    def test_loss_decreases(self):
        cfg = small_config(epochs=15)
        model = ReprModel(d=16, layers=2, seed=0)
        result = train(cfg, self.corpus, model)
        self.assertIs(result.model, model)
        self.assertEqual(list(result.curve["epoch"]), list(range(1, 16)))
        self.assertLess(result.final_loss, result.first_loss)

    def test_reproducible(self):
        cfg = small_config(epochs=2)
        a = train(cfg, self.corpus, ReprModel(d=8, layers=2, seed=1))
        b = train(cfg, self.corpus, ReprModel(d=8, layers=2, seed=1))
        self.assertTrue(a.curve.equals(b.curve))
        for k in a.model.params:
            npt.assert_array_equal(a.model.params[k], b.model.params[k])

    def test_checkpoint_after_training(self):
        result = train(small_config(epochs=1), self.corpus,
                       ReprModel(d=8, layers=2, seed=2))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "m.ckpt")
            save_model(result.model, path, meta=result.summary())
            model, meta = load_model(path)
        self.assertEqual(meta["epochs"], 1)
        for k in model.params:
            npt.assert_array_equal(model.params[k], result.model.params[k])

    @unittest.skipUnless(os.environ.get("PROVHUNT_SLOW_TESTS"),
                         "set PROVHUNT_SLOW_TESTS=1 to run")
    def test_held_out_separation(self):
        g = build_ppg(clustered_events(11, n_clusters=20))
        cfg = small_config(corpus_size=150, epochs=40, batch=16, seed=1)
        corpus = build_corpus(g, cfg)
        held = build_corpus(g, small_config(corpus_size=40, seed=99))
        result = train(cfg, corpus, ReprModel(d=32, layers=3, seed=1))
        self.assertGreaterEqual(pair_separation(result.model, held), 0.3)
