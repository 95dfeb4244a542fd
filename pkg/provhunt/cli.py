"""
Command line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 the hunt flagged
at least one threat graph, 3 any other pipeline failure.
"""
import argparse
import heapq
import json
import logging
import os
import sys

from .bench import ScenarioSpec, available, run_suite
from .bench.core import write_frame
from .config import configure, options, setup_logger
from .hunter import (
    evaluate, hunt, hunt_exhaustive, labels_from_entities, save_report
)
from .ingest import EventReader, dedup_streams, write_events
from .ppg import build_ppg, load_ppg, save_ppg
from .querykit import (
    default_patterns, load_graph, load_pois, load_query_dir, match_pois,
    save_graph, save_pois
)
from .reprnet import (
    ReprModel, embed, init_features, load_model, model_hash, save_model
)
from .sampler import SamplingConfig, sample
from .trainer import TrainConfig, build_corpus, train
from .util import (
    ConfigError, ProvHuntError, _ensure_dir, read_json, write_json
)
from .version import __version__

LOGGER = setup_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FLAGGED = 2
EXIT_FAILURE = 3

LOG_FORMAT = "ts=%(asctime)s level=%(levelname)s logger=%(name)s " \
    "msg=%(message)s"

_HANDLER = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "error[usage]: {}\n".format(message))


class _VersionAction(argparse.Action):
    def __init__(self, option_strings, dest, **kwargs):
        super(_VersionAction, self).__init__(option_strings, dest, nargs=0,
                                             default=argparse.SUPPRESS,
                                             **kwargs)

    def __call__(self, parser, namespace, values, option_string=None):
        print(json.dumps({"name": "provhunt", "version": __version__}))
        parser.exit(EXIT_OK)


def _install_handler():
    global _HANDLER
    if _HANDLER is None:
        _HANDLER = logging.StreamHandler(sys.stderr)
        _HANDLER.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger("provhunt").addHandler(_HANDLER)


def _emit(payload):
    print(json.dumps(payload, indent=2))


def _meta():
    return {"version": __version__, "config": options.effective()}


def _read_streams(paths):
    """Events of each input file, one list per file, and the skip count."""
    streams, skipped = [], 0
    for path in paths:
        reader = EventReader(path)
        streams.append(list(reader))
        skipped += reader.n_skipped
    return streams, skipped


def _merged(streams):
    return list(heapq.merge(*streams, key=lambda e: e.ts))


# ----------- #
# subcommands #
# ----------- #

def cmd_ingest(args):
    streams, skipped = _read_streams(args.inputs)
    kept, stats = dedup_streams(streams)
    out = stats.as_dict()
    out["streams"] = len(streams)
    out["skipped_lines"] = skipped
    if args.stats_out:
        write_json(args.stats_out, dict(out, meta=_meta()))
        out["stats_out"] = args.stats_out
    if args.out:
        write_events(kept, args.out)
        out["out"] = args.out
    _emit(out)
    return EXIT_OK


def _graph_from_streams(paths, no_dedup=False):
    streams, skipped = _read_streams(paths)
    if no_dedup:
        events, stats = _merged(streams), None
    else:
        events, stats = dedup_streams(streams)
    g = build_ppg(events)
    meta = _meta()
    meta["dedup"] = None if stats is None else stats.as_dict()
    meta["streams"] = len(streams)
    meta["skipped_lines"] = skipped
    return g, meta


def cmd_build_ppg(args):
    g, meta = _graph_from_streams(args.inputs, args.no_dedup)
    save_ppg(g, args.out, meta=meta)
    report = g.memory_report()
    _emit({"out": args.out, "entities": g.n_nodes, "edges": g.edge_count,
           "suppressed": g.suppressed, "total_bytes": report["total_bytes"],
           "dedup": meta["dedup"]})
    return EXIT_OK


def cmd_stats(args):
    path = args.ppg or args.ppg_flag
    if not path:
        raise ConfigError("stats needs a graph path")
    g, meta = load_ppg(path)
    report = g.memory_report()
    report["built_with"] = meta.get("config") if isinstance(meta, dict) \
        else None
    _emit(report)
    return EXIT_OK


def cmd_pois(args):
    streams, _ = _read_streams(args.inputs)
    pois = match_pois(_merged(streams), default_patterns())
    save_pois(pois, args.out, meta=_meta())
    _emit({"out": args.out, "pois": len(pois),
           "matched_events": len(pois.matches)})
    return EXIT_OK


def cmd_sample(args):
    g, _ = load_ppg(args.ppg)
    pois = load_pois(args.pois)
    graphs = sample(g, pois.indices(g), SamplingConfig.from_options())
    _ensure_dir(args.out)
    meta = _meta()
    for tg in graphs:
        save_graph(tg, os.path.join(args.out, tg.id + ".json"), meta=meta)
    _emit({"out": args.out, "threat_graphs": len(graphs),
           "truncated": sum(tg.truncated for tg in graphs)})
    return EXIT_OK


def cmd_train(args):
    if args.benign:
        g, _ = _graph_from_streams(args.benign)
    else:
        g, _ = load_ppg(args.ppg)
    cfg = TrainConfig.from_options()
    corpus = build_corpus(g, cfg)
    model = ReprModel.from_options()
    result = train(cfg, corpus, model)
    meta = _meta()
    meta["train"] = result.summary()
    save_model(result.model, args.out, meta=meta)
    out = dict(result.summary(), out=args.out,
               model_hash=model_hash(result.model))
    if args.curve:
        out["curve"] = write_frame(result.curve, args.curve)
    _emit(out)
    return EXIT_OK


def cmd_embed(args):
    model, _ = load_model(args.model)
    g = load_graph(args.graph)
    vec = embed(model, init_features(g))
    payload = {"label": g.label, "model_hash": model_hash(model),
               "dim": int(vec.shape[0]), "embedding": vec.tolist()}
    if args.out:
        write_json(args.out, payload)
        _emit({"out": args.out, "dim": payload["dim"]})
    else:
        _emit(payload)
    return EXIT_OK


def cmd_hunt(args):
    if not (args.exhaustive or args.pois):
        raise ConfigError("hunt needs --pois unless --exhaustive is set")
    g, _ = load_ppg(args.ppg)
    queries = load_query_dir(args.queries)
    model, _ = load_model(args.model)
    cfg = SamplingConfig.from_options()
    if args.exhaustive:
        report = hunt_exhaustive(g, queries, model, cfg=cfg)
    else:
        report = hunt(g, load_pois(args.pois), queries, model, cfg=cfg)
    if args.labels:
        labels = read_json(args.labels, stage="schema")
        entities = labels.get("attack_entities", []) \
            if isinstance(labels, dict) else labels
        evaluate(report, labels_from_entities(report, entities))
    save_report(report, args.report, meta=_meta())
    _emit({"report": args.report, "threat_graphs": len(report),
           "flagged": report.n_flagged, "metrics": report.metrics})
    return EXIT_FLAGGED if report.n_flagged else EXIT_OK


def cmd_bench(args):
    spec = ScenarioSpec()
    summary = run_suite(args.suite, spec, args.out)
    _emit({"suite": args.suite, "out": os.path.join(args.out,
                                                    args.suite + ".json"),
           "keys": sorted(summary)})
    return EXIT_OK


# ------ #
# parser #
# ------ #

def _opt(parser, flag, key, **kwargs):
    """Flag that overrides the config option ``key`` when given."""
    parser.add_argument(flag, dest=key, default=None, **kwargs)


def _inputs(parser):
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="FILE",
                        help="JSONL event streams, deduplicated separately")


def build_parser():
    parser = _Parser(prog="provhunt",
                     description="Provenance-based threat hunting.")
    parser.add_argument("--version", action=_VersionAction,
                        help="print name and version as JSON and exit")
    parser.add_argument("--config", default=None,
                        help="INI file overlaid on the defaults")
    _opt(parser, "--log-level", "options.log_level",
         choices=["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"])
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for training and the synthetic range")
    _opt(parser, "--abs-rules", "PATHS.abs_rules",
         help="abstraction rules file")
    sub = parser.add_subparsers(dest="command", metavar="command",
                                parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ingest", help="validate and deduplicate events")
    _inputs(p)
    p.add_argument("--out", default=None, help="deduplicated JSONL")
    p.add_argument("--stats-out", default=None, help="dedup stats JSON")
    _opt(p, "--window-ms", "ingest.window_ms", type=int)
    _opt(p, "--no-s1", "ingest.s1", action="store_false")
    _opt(p, "--no-s2", "ingest.s2", action="store_false")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-ppg", help="build and save the graph")
    _inputs(p)
    p.add_argument("--out", required=True)
    p.add_argument("--no-dedup", action="store_true")
    _opt(p, "--window-ms", "ingest.window_ms", type=int)
    _opt(p, "--versioning", "ppg.versioning", action="store_true")
    p.set_defaults(func=cmd_build_ppg)

    p = sub.add_parser("stats", help="memory report of a saved graph")
    p.add_argument("ppg", nargs="?", default=None)
    p.add_argument("--ppg", dest="ppg_flag", default=None,
                   help="same as the positional path")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pois", help="match POI patterns against events")
    _inputs(p)
    p.add_argument("--out", required=True)
    _opt(p, "--patterns", "PATHS.poi_patterns")
    p.set_defaults(func=cmd_pois)

    p = sub.add_parser("sample", help="grow threat graphs around POIs")
    p.add_argument("--ppg", required=True)
    p.add_argument("--pois", required=True)
    p.add_argument("--out", required=True, help="output directory")
    _opt(p, "--k", "sampler.k", type=int)
    _opt(p, "--rules", "sampler.rules", choices=["table3", "all"])
    _opt(p, "--max-nodes", "sampler.max_nodes", type=int)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train the graph matching model")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--benign", nargs="+", default=None, metavar="FILE",
                        help="benign event streams, deduplicated and built")
    source.add_argument("--ppg", default=None, help="saved benign graph")
    p.add_argument("--config", dest="train_config", default=None,
                   help="INI file overlaid on the global configuration")
    p.add_argument("--out", required=True, help="model checkpoint")
    p.add_argument("--curve", default=None,
                   help="loss curve path, extension from file_format")
    _opt(p, "--epochs", "train.epochs", type=int)
    _opt(p, "--corpus-size", "train.corpus_size", type=int)
    _opt(p, "--batch", "train.batch", type=int)
    _opt(p, "--lr", "train.lr", type=float)
    _opt(p, "--tau", "train.tau", type=float)
    _opt(p, "--dim", "model.d", type=int)
    _opt(p, "--layers", "model.layers", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="embedding of one graph")
    p.add_argument("--model", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("hunt", help="score threat graphs against queries")
    p.add_argument("--ppg", required=True)
    p.add_argument("--queries", required=True, help="query graph directory")
    p.add_argument("--model", required=True)
    p.add_argument("--pois", default=None)
    p.add_argument("--report", required=True, help="report JSON")
    p.add_argument("--exhaustive", action="store_true",
                   help="treat every process as a POI")
    p.add_argument("--labels", default=None,
                   help="JSON with attack_entities, enables metrics")
    _opt(p, "--theta", "hunt.theta", type=float)
    _opt(p, "--stride", "hunt.stride", type=int)
    _opt(p, "--k", "sampler.k", type=int)
    p.set_defaults(func=cmd_hunt)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--suite", required=True, choices=available())
    p.add_argument("--out", default="results")
    _opt(p, "--events", "bench.events", type=int)
    _opt(p, "--days", "bench.days", type=int)
    p.set_defaults(func=cmd_bench)
    return parser


def _overrides(args):
    out = {k: v for (k, v) in vars(args).items() if "." in k}
    if args.seed is not None:
        for key in ("options.seed", "train.seed", "bench.seed"):
            out[key] = args.seed
    return out


def run(argv=None):
    """
    Parse ``argv``, configure and dispatch

    Returns
    -------
    code : int
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE

    _install_handler()
    try:
        configure([args.config, getattr(args, "train_config", None)],
                  _overrides(args))
    except ConfigError as e:
        print("error[{}]: {}".format(e.stage, e), file=sys.stderr)
        return EXIT_USAGE

    try:
        return args.func(args)
    except ConfigError as e:
        print("error[{}]: {}".format(e.stage, e), file=sys.stderr)
        return EXIT_USAGE
    except ProvHuntError as e:
        print("error[{}]: {}".format(e.stage, e), file=sys.stderr)
        return EXIT_FAILURE
    except (OSError, KeyError, ValueError) as e:
        print("error[{}]: {}".format(args.command, e), file=sys.stderr)
        return EXIT_FAILURE


def main():
    sys.exit(run())
