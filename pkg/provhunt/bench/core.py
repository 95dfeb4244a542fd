"""
Benchmarks over the synthetic range: compaction against the naive store,
construction scaling, sampling coverage and end-to-end hunting.
"""
import os
import time

import numpy as np
import pandas as pd

from ..config import options, setup_logger
from ..hunter import evaluate, hunt, labels_from_entities
from ..ingest import dedup
from ..ppg import build_ppg
from ..querykit import AttrGraph, PoiSet, default_patterns, match_pois
from ..sampler import SamplingConfig, coverage_noise, sample
from ..util import _ensure_dir
from .naive import NaiveStore, naive_edge_multiset, ppg_edge_multiset
from .scenario import generate

LOGGER = setup_logger(__name__)

SAMPLING_KS = (1, 2, 3, 4)


def write_frame(df, path_base):
    """
    Write ``df`` next to ``path_base`` in ``options.file_format``

    Returns
    -------
    fn : str
    """
    EXTENSION = options["options.file_format"]
    fn = path_base + "." + EXTENSION
    _ensure_dir(os.path.dirname(fn) or ".")
    if EXTENSION == "csv":
        df.to_csv(fn, index=False)
    elif EXTENSION == "pkl":
        df.to_pickle(fn)
    elif EXTENSION == "feather":
        df.reset_index(drop=True).to_feather(fn)
    return fn


def bench_memory(events, check_edges=True):
    """
    Bytes of the packed graph against the naive adjacency-list store

    Both stores are built from the same deduplicated events.

    Parameters
    ----------
    events : list of AuditEvent

    check_edges : bool
        Also compare the two edge multisets.

    Returns
    -------
    result : dict
        ``ppg_bytes`` (packed region), ``side_table_bytes``,
        ``naive_bytes``, ``reduction_pct`` (0 for an empty stream) and
        ``reduction_with_side_pct``, plus edge counts and dedup stats.
    """
    kept, stats = dedup(events)
    g = build_ppg(kept, versioning=False)
    naive = NaiveStore(kept)
    report = g.memory_report()
    ppg_bytes = report["total_bytes"]
    side = report["side_table_bytes"]
    naive_bytes = naive.nbytes()

    def pct(num):
        return 0.0 if naive.n_edges == 0 else 100.0 * (1 - num / naive_bytes)

    result = {
        "events": len(events),
        "dedup": stats.as_dict(),
        "ppg_bytes": ppg_bytes,
        "side_table_bytes": side,
        "naive_bytes": naive_bytes,
        "reduction_pct": pct(ppg_bytes),
        "reduction_with_side_pct": pct(ppg_bytes + side),
        "ppg_edges": g.edge_count,
        "naive_edges": naive.n_edges,
        "exp_nodes": report["exp_node_count"],
    }
    if check_edges:
        result["edges_equal"] = \
            ppg_edge_multiset(g) == naive_edge_multiset(naive)
    LOGGER.info("memory ppg={} naive={} reduction={:.1f}%".format(
        ppg_bytes, naive_bytes, result["reduction_pct"]))
    return result


def _build_seconds(events, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        build_ppg(events)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_linear(spec, factor=2, repeats=3):
    """
    Construction time at ``spec`` and at ``factor`` times its events

    Returns
    -------
    result : dict
        Event counts, best-of-``repeats`` seconds and their ``ratio``.
    """
    small = generate(spec).events
    large = generate(spec.scaled(factor)).events
    t_small = _build_seconds(small, repeats)
    t_large = _build_seconds(large, repeats)
    ratio = t_large / t_small if t_small > 0 else float("nan")
    LOGGER.info("construction {} events {:.3f}s, {} events {:.3f}s, "
                "ratio {:.2f}".format(len(small), t_small, len(large),
                                      t_large, ratio))
    return {"events_small": len(small), "events_large": len(large),
            "seconds_small": t_small, "seconds_large": t_large,
            "ratio": ratio}


def union_graph(graphs, label=None):
    """Fold attributed graphs into one, merging nodes by identity key."""
    out = AttrGraph(label)
    by_key = {}
    for g in graphs:
        local = []
        for n in g.nodes():
            key = g.key(n)
            if key not in by_key:
                by_key[key] = out.add_node(g.names[n], g.abs[n])
            local.append(by_key[key])
        for e in g.edges:
            if local[e.src] != local[e.dst]:
                out.add_edge(local[e.src], local[e.dst], e.op, e.ts)
    return out


def campaign_pois(events, labels, name, mode="patterns", patterns=None):
    """
    Seeds for one campaign

    ``patterns`` matches the POI patterns against the campaign's events and
    falls back to the entities the campaign created when nothing matches;
    ``entities`` uses every entity the campaign touched.
    """
    camp = labels["campaigns"][name]
    if mode == "entities":
        return PoiSet(camp["entities"])
    if mode != "patterns":
        msg = "Unknown POI mode {}. Known modes are ['patterns', 'entities']"
        raise ValueError(msg.format(mode))
    patterns = default_patterns() if patterns is None else patterns
    pois = match_pois([events[i] for i in camp["events"]], patterns)
    return pois if len(pois) else PoiSet(camp["created"])


def bench_sampling(events, labels, queries, ks=SAMPLING_KS, mode="patterns",
                   rules=None):
    """
    Coverage and noise of the sampled graphs per campaign and hop limit

    The threat graphs grown from a campaign's POIs are folded into one
    graph and compared with the campaign's query graph.

    Parameters
    ----------
    events : list of AuditEvent
        The raw range; graphs are built without deduplication so event
        indices in ``labels`` stay valid.

    labels : dict
        As produced by ``generate``.

    queries : list of AttrGraph
        Labelled with campaign names.

    ks : iterable of int

    mode : {"patterns", "entities"}
        How POIs are chosen, see ``campaign_pois``.

    Returns
    -------
    table : pandas.DataFrame
        One row per (campaign, k) with ``node_cr``, ``edge_cr``,
        ``node_nr``, ``edge_nr``, ``n_graphs`` and ``n_nodes``.
    """
    g = build_ppg(events)
    by_label = {q.label: q for q in queries}
    rows = []
    for name in labels["campaigns"]:
        if name not in by_label:
            LOGGER.warning("no query graph for campaign {}".format(name))
            continue
        pois = campaign_pois(events, labels, name, mode)
        seeds = pois.indices(g)
        for k in ks:
            cfg = SamplingConfig(k=k, rules=rules)
            graphs = sample(g, seeds, cfg)
            merged = union_graph([tg.graph for tg in graphs], name)
            row = {"campaign": name, "k": int(k), "n_pois": len(seeds),
                   "n_graphs": len(graphs), "n_nodes": merged.n_nodes}
            row.update(coverage_noise(merged, by_label[name]))
            rows.append(row)
    table = pd.DataFrame(rows, columns=[
        "campaign", "k", "n_pois", "n_graphs", "n_nodes", "node_cr",
        "edge_cr", "node_nr", "edge_nr"])
    LOGGER.info("sampling table\n{}".format(table.to_string(index=False)))
    return table


def _score_stats(scores):
    if len(scores) == 0:
        return {"n": 0, "mean": None, "min": None, "max": None}
    return {"n": int(len(scores)), "mean": float(np.mean(scores)),
            "min": float(np.min(scores)), "max": float(np.max(scores))}


def bench_hunt(events, labels, queries, model, theta=None, patterns=None):
    """
    Deduplicate, build, match POIs, hunt and score against the labels

    A threat graph counts as an attack when one of its seeds is an entity
    created by a campaign.

    Returns
    -------
    result : dict
        ``metrics`` (recall and AUC are None without attack graphs),
        ``attack_scores`` and ``benign_scores`` summaries, ``report``
        (the HuntReport, None without POIs) and ``scores``, a DataFrame of
        per-graph scores with an ``attack`` column.
    """
    theta = options["hunt.theta"] if theta is None else float(theta)
    kept, _ = dedup(events)
    g = build_ppg(kept)
    patterns = default_patterns() if patterns is None else patterns
    pois = match_pois(kept, patterns)
    columns = ["graph_id", "best_query", "score", "flagged", "n_nodes",
               "attack"]
    if len(pois) == 0:
        LOGGER.warning("no POIs matched; nothing to hunt")
        metrics = {"recall": None, "fpr": None, "accuracy": None,
                   "auc": None, "tp": 0, "fp": 0, "fn": 0, "tn": 0}
        return {"metrics": metrics, "n_graphs": 0, "n_flagged": 0,
                "attack_scores": _score_stats([]),
                "benign_scores": _score_stats([]), "report": None,
                "scores": pd.DataFrame(columns=columns)}

    report = hunt(g, pois, queries, model, theta=theta)
    truth = labels_from_entities(report, labels.get("attack_entities", []))
    metrics = evaluate(report, truth)
    frame = report.to_frame()
    frame["attack"] = frame["graph_id"].map(truth).astype(bool)
    attack = frame.loc[frame["attack"], "score"].to_numpy()
    benign = frame.loc[~frame["attack"], "score"].to_numpy()
    return {"metrics": metrics, "n_graphs": len(report),
            "n_flagged": report.n_flagged,
            "attack_scores": _score_stats(attack),
            "benign_scores": _score_stats(benign), "report": report,
            "scores": frame[columns]}
