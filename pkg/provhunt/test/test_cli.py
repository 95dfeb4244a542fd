import contextlib
import io
import json
import os
import tempfile
import unittest

from provhunt.bench import ScenarioSpec, generate, write_scenario
from provhunt.cli import build_parser, run
from provhunt.config import options
from provhunt.ingest import AuditEvent, write_events
from provhunt.version import __version__
from provhunt.vocab import EdgeOp, EntityKind


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = run(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestUsage(unittest.TestCase):

    def tearDown(self):
        options.reset()

    def test_help(self):
        code, out, _ = call("--help")
        self.assertEqual(code, 0)
        self.assertIn("usage: provhunt", out)

    def test_unknown_command(self):
        code, _, err = call("frobnicate")
        self.assertEqual(code, 1)
        self.assertIn("error[usage]", err)

    def test_missing_command(self):
        self.assertEqual(call()[0], 1)

    def test_version(self):
        code, out, _ = call("--version")
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out), {"name": "provhunt",
                                           "version": __version__})

    def test_missing_config_file(self):
        code, _, err = call("--config", "/nonexistent/provhunt.ini", "stats",
                            "--ppg", "x")
        self.assertEqual(code, 1)
        self.assertIn("error[config]", err)

    def test_flags_map_to_options(self):
        args = build_parser().parse_args(
            ["--seed", "3", "sample", "--ppg", "g", "--pois", "p", "--out",
             "o", "--k", "4"])
        self.assertEqual(vars(args)["sampler.k"], 4)
        self.assertIsNone(vars(args)["sampler.rules"])
        self.assertEqual(args.seed, 3)

    def test_missing_input_is_runtime_failure(self):
        code, _, err = call("stats", "--ppg", "/nonexistent/graph.ppg")
        self.assertEqual(code, 3)
        self.assertIn("error[ppg]", err)


def _event(ts, op, obj, sbj="p1", kind=EntityKind.FILE, addr=None):
    return AuditEvent(ts, sbj, "bash", obj, obj, kind, op, op.default_dir,
                      addr)


class TestStreams(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        def send(ts):
            return _event(ts, EdgeOp.SEND, "net:1", kind=EntityKind.NETFLOW,
                          addr="8.8.8.8")

        self.a = os.path.join(self.tmp.name, "a.jsonl")
        self.b = os.path.join(self.tmp.name, "b.jsonl")
        write_events([_event(0, EdgeOp.READ, "/etc/hosts"), send(10),
                      _event(20, EdgeOp.WRITE, "/tmp/out")], self.a)
        write_events([send(15), _event(25, EdgeOp.READ, "/etc/hosts",
                                       sbj="p2")], self.b)

    def tearDown(self):
        self.tmp.cleanup()
        options.reset()

    def test_dedup_state_is_per_stream(self):
        # merged into one stream the send at 15 would repeat the one at 10
        code, out, _ = call("ingest", "--in", self.a, self.b, "--out",
                            os.path.join(self.tmp.name, "kept.jsonl"))
        self.assertEqual(code, 0)
        stats = json.loads(out)
        self.assertEqual(stats["streams"], 2)
        self.assertEqual(stats["input_events"], 5)
        self.assertEqual(stats["remaining"], 5)

    def test_build_from_streams(self):
        code, out, _ = call("build-ppg", "--in", self.a, self.b, "--out",
                            os.path.join(self.tmp.name, "g.ppg"))
        self.assertEqual(code, 0)
        built = json.loads(out)
        self.assertEqual(built["dedup"]["remaining"], 5)
        self.assertEqual(built["edges"] + built["suppressed"], 5)
        self.assertEqual(built["entities"], 5)


class TestPipeline(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dir = cls.tmp.name
        scenario = generate(ScenarioSpec(seed=5, events=3000, days=1))
        cls.paths = write_scenario(scenario, os.path.join(cls.dir, "range"))

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def tearDown(self):
        options.reset()

    def path(self, name):
        return os.path.join(self.dir, name)

    def build(self):
        code, out, _ = call("build-ppg", "--in", self.paths["events"],
                            "--out", self.path("g.ppg"))
        self.assertEqual(code, 0)
        return json.loads(out)

    def pois(self):
        code, _, _ = call("pois", "--in", self.paths["events"], "--out",
                          self.path("pois.json"))
        self.assertEqual(code, 0)

    def train_config(self):
        path = self.path("train.ini")
        with open(path, "w") as f:
            f.write("[train]\nmin_nodes = 4\nmax_nodes = 30\n")
        return path

    def model(self):
        code, out, _ = call("--seed", "3", "train", "--benign",
                            self.paths["events"], "--config",
                            self.train_config(), "--out", self.path("m.phrm"),
                            "--epochs", "1", "--corpus-size", "8", "--batch",
                            "4", "--dim", "8", "--layers", "1")
        self.assertEqual(code, 0)
        self.build()
        return json.loads(out)

    def test_train_from_ppg(self):
        self.build()
        code, out, _ = call("train", "--ppg", self.path("g.ppg"), "--config",
                            self.train_config(), "--out",
                            self.path("m2.phrm"), "--epochs", "2",
                            "--corpus-size", "6", "--batch", "3", "--dim",
                            "8", "--layers", "1")
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)["epochs"], 2)
        self.assertTrue(os.path.isfile(self.path("m2.phrm")))

    def test_train_needs_a_source(self):
        code, _, err = call("train", "--out", self.path("m3.phrm"))
        self.assertEqual(code, 1)
        self.assertIn("error[usage]", err)

    def test_ingest(self):
        code, out, _ = call("ingest", "--in", self.paths["events"],
                            "--out", self.path("dedup.jsonl"), "--stats-out",
                            self.path("dedup-stats.json"))
        self.assertEqual(code, 0)
        stats = json.loads(out)
        self.assertEqual(stats["input_events"],
                         stats["s1_removed"] + stats["s2_removed"] +
                         stats["remaining"])
        self.assertEqual(stats["skipped_lines"], 0)
        self.assertTrue(os.path.isfile(self.path("dedup.jsonl")))
        with open(self.path("dedup-stats.json")) as f:
            saved = json.load(f)
        self.assertEqual(saved["remaining"], stats["remaining"])
        self.assertEqual(saved["streams"], 1)
        self.assertIn("config", saved["meta"])

    def test_build_and_stats(self):
        built = self.build()
        self.assertGreater(built["edges"], 0)
        code, out, _ = call("stats", self.path("g.ppg"))
        self.assertEqual(code, 0)
        report = json.loads(out)
        self.assertEqual(report["edge_count"], built["edges"])
        self.assertEqual(report["total_bytes"], built["total_bytes"])
        self.assertEqual(report["built_with"]["sampler"]["k"], 2)

    def test_pois_and_sample(self):
        self.build()
        self.pois()
        with open(self.path("pois.json")) as f:
            self.assertGreater(len(json.load(f)["pois"]), 0)
        code, out, _ = call("sample", "--ppg", self.path("g.ppg"), "--pois",
                            self.path("pois.json"), "--out",
                            self.path("tgs"), "--k", "1")
        self.assertEqual(code, 0)
        n = json.loads(out)["threat_graphs"]
        files = os.listdir(self.path("tgs"))
        self.assertEqual(len(files), n)
        with open(os.path.join(self.path("tgs"), sorted(files)[0])) as f:
            tg = json.load(f)
        self.assertIn("provenance", tg)
        self.assertEqual(tg["meta"]["config"]["sampler"]["k"], 1)

    def test_train_embed_hunt(self):
        trained = self.model()
        self.assertEqual(trained["epochs"], 1)
        query = os.path.join(self.paths["queries"], "upgrade_hijack.json")
        code, out, _ = call("embed", "--model", self.path("m.phrm"),
                            "--graph", query)
        self.assertEqual(code, 0)
        emb = json.loads(out)
        self.assertEqual(emb["dim"], 8)
        self.assertEqual(len(emb["embedding"]), 8)
        self.assertEqual(emb["model_hash"], trained["model_hash"])

        self.pois()
        code, out, _ = call("hunt", "--ppg", self.path("g.ppg"), "--queries",
                            self.paths["queries"], "--model",
                            self.path("m.phrm"), "--pois",
                            self.path("pois.json"), "--labels",
                            self.paths["labels"], "--report",
                            self.path("report.json"))
        summary = json.loads(out)
        self.assertEqual(code, 2 if summary["flagged"] else 0)
        self.assertIsNotNone(summary["metrics"])
        with open(self.path("report.json")) as f:
            report = json.load(f)
        self.assertEqual(report["n_graphs"], summary["threat_graphs"])
        self.assertEqual(report["meta"]["config"]["hunt"]["theta"], 0.3)

        code, _, _ = call("hunt", "--ppg", self.path("g.ppg"), "--queries",
                          self.paths["queries"], "--model",
                          self.path("m.phrm"), "--theta", "1.01", "--pois",
                          self.path("pois.json"), "--report",
                          self.path("report2.json"))
        self.assertEqual(code, 0)

    def test_hunt_needs_pois(self):
        code, _, err = call("hunt", "--ppg", self.path("g.ppg"), "--queries",
                            self.paths["queries"], "--model",
                            self.path("m.phrm"), "--report",
                            self.path("r.json"))
        self.assertEqual(code, 1)
        self.assertIn("error[config]", err)

    def test_hunt_missing_model(self):
        self.build()
        self.pois()
        code, _, err = call("hunt", "--ppg", self.path("g.ppg"), "--queries",
                            self.paths["queries"], "--model",
                            self.path("missing.phrm"), "--pois",
                            self.path("pois.json"), "--report",
                            self.path("r.json"))
        self.assertEqual(code, 3)
        self.assertIn("error[reprnet]", err)

    def test_unwritable_output_is_runtime_failure(self):
        blocker = self.path("blocker")
        with open(blocker, "w") as f:
            f.write("not a directory")
        code, _, err = call("build-ppg", "--in", self.paths["events"],
                            "--out", os.path.join(blocker, "g.ppg"))
        self.assertEqual(code, 3)
        self.assertIn("error[build-ppg]", err)

        query = os.path.join(self.paths["queries"], "upgrade_hijack.json")
        self.model()
        code, _, err = call("embed", "--model", self.path("m.phrm"),
                            "--graph", query, "--out",
                            os.path.join(blocker, "e.json"))
        self.assertEqual(code, 3)
        self.assertIn("error[embed]", err)

    def test_bench_memory(self):
        out_dir = self.path("bench")
        code, out, _ = call("--seed", "2", "bench", "--suite", "memory",
                            "--events", "1500", "--days", "1", "--out",
                            out_dir)
        self.assertEqual(code, 0)
        with open(os.path.join(out_dir, "memory.json")) as f:
            data = json.load(f)
        self.assertEqual(data["scenario"]["seed"], 2)
        self.assertEqual(data["scenario"]["events"], 1500)
        self.assertGreater(data["result"]["reduction_pct"], 0)
