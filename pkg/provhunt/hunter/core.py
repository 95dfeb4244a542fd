"""
Hunting: sample threat graphs, score them against query graphs and flag
the ones resembling a known attack.
"""
import time

import numpy as np
import pandas as pd
from sklearn.metrics import roc_auc_score

from ..config import options, setup_logger
from ..querykit import PoiSet
from ..reprnet import forward_pair, init_features, model_hash
from ..sampler import SamplingConfig, sample
from ..util import ProvHuntError, write_json

LOGGER = setup_logger(__name__)


class HuntVerdict(object):
    """
    Outcome for one threat graph

    Attributes
    ----------
    graph_id : str

    best_query : str
        Query with the highest score.

    score : float
        Highest score over the queries.

    flagged : bool
        ``score >= theta``.

    scores : dict
        Query label to score.

    seeds : list of str
        Original ids of the POIs the graph grew from.
    """
    __slots__ = ["graph_id", "best_query", "score", "flagged", "scores",
                 "seeds", "n_nodes", "n_edges"]

    def __init__(self, graph_id, scores, theta, seeds=(), n_nodes=0,
                 n_edges=0):
        self.graph_id = graph_id
        self.scores = dict(scores)
        self.best_query, self.score = max(self.scores.items(),
                                          key=lambda kv: kv[1])
        self.flagged = bool(self.score >= theta)
        self.seeds = list(seeds)
        self.n_nodes = n_nodes
        self.n_edges = n_edges

    def to_dict(self):
        return {"graph_id": self.graph_id, "best_query": self.best_query,
                "score": self.score, "flagged": self.flagged,
                "scores": self.scores, "seeds": self.seeds,
                "n_nodes": self.n_nodes, "n_edges": self.n_edges}

    def __repr__(self):
        msg = "HuntVerdict({}, best={}, score={:.4f}, flagged={})"
        return msg.format(self.graph_id, self.best_query, self.score,
                          self.flagged)


class HuntReport(object):
    """
    Verdicts sorted by descending score plus the settings that produced
    them

    Attributes
    ----------
    verdicts : list of HuntVerdict

    config : dict
        ``theta``, ``k``, ``model_hash`` and the sampling mode.

    timing : dict
        Seconds spent sampling and scoring.

    metrics : dict or None
        Filled by ``evaluate`` when labels are available.

    threat_graphs : list of ThreatGraph
    """

    def __init__(self, verdicts, config, timing=None, threat_graphs=None):
        self.verdicts = sorted(verdicts, key=lambda v: (-v.score, v.graph_id))
        self.config = dict(config)
        self.timing = dict(timing or {})
        self.metrics = None
        self.threat_graphs = list(threat_graphs or [])

    def __len__(self):
        return len(self.verdicts)

    @property
    def theta(self):
        return self.config["theta"]

    @property
    def n_flagged(self):
        return sum(v.flagged for v in self.verdicts)

    def flagged_ids(self):
        return [v.graph_id for v in self.verdicts if v.flagged]

    def scores(self):
        """Best score per graph id."""
        return {v.graph_id: v.score for v in self.verdicts}

    def to_frame(self):
        return pd.DataFrame(
            [(v.graph_id, v.best_query, v.score, v.flagged, v.n_nodes)
             for v in self.verdicts],
            columns=["graph_id", "best_query", "score", "flagged", "n_nodes"])

    def to_dict(self):
        return {
            "config": self.config,
            "timing": self.timing,
            "n_graphs": len(self.verdicts),
            "n_flagged": self.n_flagged,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "metrics": self.metrics,
        }

    def __repr__(self):
        msg = "HuntReport(graphs={}, flagged={}, theta={})"
        return msg.format(len(self.verdicts), self.n_flagged, self.theta)


def _query_labels(queries):
    labels = []
    for (i, q) in enumerate(queries):
        label = q.label if q.label else "q{}".format(i)
        if label in labels:
            label = "{}#{}".format(label, i)
        labels.append(label)
    return labels


def score_graphs(model, graphs, queries, theta, g=None):
    """
    Verdicts of every threat graph against every query

    Parameters
    ----------
    model : ReprModel

    graphs : list of ThreatGraph

    queries : list of AttrGraph

    theta : float

    g : Ppg or PpgSnapshot, optional
        Resolves seeds to original ids.

    Returns
    -------
    verdicts : list of HuntVerdict
    """
    labels = _query_labels(queries)
    qfeats = [init_features(q) for q in queries]
    out = []
    for tg in graphs:
        f = init_features(tg.graph)
        scores = {label: forward_pair(model, f, qf)[2]
                  for (label, qf) in zip(labels, qfeats)}
        seeds = [g.original_id(s) for s in tg.seeds] if g is not None \
            else [str(s) for s in tg.seeds]
        out.append(HuntVerdict(tg.id, scores, theta, seeds, tg.n_nodes,
                               tg.n_edges))
    return out


def _run(g, seeds, queries, model, theta, cfg, mode):
    if not queries:
        raise ProvHuntError("hunting needs at least one query graph", "hunt")
    for q in queries:
        if q.n_nodes == 0:
            raise ProvHuntError("query graph {!r} is empty".format(q.label),
                                "hunt")
    config = {"theta": theta, "k": cfg.k, "rules": cfg.rules,
              "mode": mode, "model_hash": model_hash(model),
              "n_queries": len(queries), "n_pois": len(seeds)}
    if not seeds:
        return HuntReport([], config, {"sample_s": 0.0, "score_s": 0.0})

    t0 = time.perf_counter()
    graphs = sample(g, seeds, cfg)
    t1 = time.perf_counter()
    verdicts = score_graphs(model, graphs, queries, theta, g)
    t2 = time.perf_counter()
    report = HuntReport(verdicts, config,
                        {"sample_s": t1 - t0, "score_s": t2 - t1}, graphs)
    LOGGER.info("hunt scored {} threat graphs against {} queries; {} flagged "
                "at theta={}".format(len(report), len(queries),
                                     report.n_flagged, theta))
    return report


def _resolve_pois(g, pois):
    if isinstance(pois, PoiSet):
        return pois.indices(g)
    return list(pois)


def hunt(g, pois, queries, model, theta=None, k=None, cfg=None):
    """
    Hunt around points of interest

    Parameters
    ----------
    g : Ppg or PpgSnapshot

    pois : PoiSet or iterable of int
        Original ids or node indices of ``g``.

    queries : list of AttrGraph

    model : ReprModel

    theta : float, optional
        Defaults to ``hunt.theta``.

    k : int, optional
        Overrides the hop limit of ``cfg``.

    cfg : SamplingConfig, optional

    Returns
    -------
    report : HuntReport

    Raises
    ------
    ProvHuntError
        When there are no POIs or no queries.
    """
    theta = options["hunt.theta"] if theta is None else float(theta)
    cfg = SamplingConfig() if cfg is None else cfg
    if k is not None:
        cfg = SamplingConfig(k, cfg.rules, cfg.max_nodes, cfg.poi_reset,
                             cfg.merge)
    seeds = _resolve_pois(g, pois)
    if not seeds:
        raise ProvHuntError("no POIs to hunt from; use the exhaustive mode "
                            "when no indicators are available", "hunt")
    return _run(g, seeds, queries, model, theta, cfg, "poi")


def hunt_exhaustive(g, queries, model, theta=None, k=None, stride=None,
                    cfg=None):
    """
    Hunt without indicators, treating every ``stride``-th process as a POI

    Each seed grows its own graph: reaching another seed does not reset the
    hop budget and overlapping graphs are not merged.

    Returns
    -------
    report : HuntReport
        Empty when ``g`` has no processes.
    """
    theta = options["hunt.theta"] if theta is None else float(theta)
    stride = options["hunt.stride"] if stride is None else int(stride)
    if stride < 1:
        raise ValueError("stride must be at least 1, got {}".format(stride))
    base = SamplingConfig() if cfg is None else cfg
    cfg = SamplingConfig(base.k if k is None else k, base.rules,
                         base.max_nodes, poi_reset=False, merge=False)
    seeds = list(g.process_nodes())[::stride]
    return _run(g, seeds, queries, model, theta, cfg, "exhaustive")


def labels_from_entities(report, attack_entities):
    """
    Ground truth per threat graph: an attack when any seed is an attack
    entity
    """
    attack = set(attack_entities)
    return {v.graph_id: any(s in attack for s in v.seeds)
            for v in report.verdicts}


def _ratio(num, den):
    return None if den == 0 else num / den


def _confusion(flags, truth):
    tp = int(np.sum(flags & truth))
    fp = int(np.sum(flags & ~truth))
    fn = int(np.sum(~flags & truth))
    tn = int(np.sum(~flags & ~truth))
    return tp, fp, fn, tn


def _labels_for(report, labels):
    missing = [v.graph_id for v in report.verdicts if v.graph_id not in labels]
    if missing:
        msg = "no label for threat graph(s) {}".format(", ".join(missing[:5]))
        raise ProvHuntError(msg, "hunt")
    return np.array([bool(labels[v.graph_id]) for v in report.verdicts],
                    dtype=bool)


def evaluate(report, labels):
    """
    Confusion-matrix metrics at the report's threshold and the ROC AUC of
    the scores

    Parameters
    ----------
    report : HuntReport

    labels : dict
        Graph id to True for attack graphs. Every graph must be labelled.

    Returns
    -------
    metrics : dict
        ``recall``, ``fpr``, ``accuracy`` and ``auc`` (ties averaged), each
        None when undefined, plus the confusion counts. Also stored on
        ``report.metrics``.
    """
    truth = _labels_for(report, labels)
    flags = np.array([v.flagged for v in report.verdicts], dtype=bool)
    scores = np.array([v.score for v in report.verdicts])
    tp, fp, fn, tn = _confusion(flags, truth)
    auc = None
    if truth.any() and not truth.all():
        auc = float(roc_auc_score(truth, scores))
    metrics = {
        "recall": _ratio(tp, tp + fn),
        "fpr": _ratio(fp, fp + tn),
        "accuracy": _ratio(tp + tn, len(truth)),
        "auc": auc,
        "tp": tp, "fp": fp, "fn": fn, "tn": tn,
    }
    report.metrics = metrics
    return metrics


def threshold_sweep(report, thetas, labels=None):
    """
    Flag counts, and recall and FPR when labelled, over a grid of
    thresholds

    Returns
    -------
    sweep : pandas.DataFrame
        One row per threshold.
    """
    scores = np.array([v.score for v in report.verdicts])
    truth = None if labels is None else _labels_for(report, labels)
    rows = []
    for theta in thetas:
        flags = scores >= theta
        row = {"theta": float(theta), "flagged": int(flags.sum())}
        if truth is not None:
            tp, fp, fn, tn = _confusion(flags, truth)
            row["recall"] = _ratio(tp, tp + fn)
            row["fpr"] = _ratio(fp, fp + tn)
        rows.append(row)
    return pd.DataFrame(rows)


def save_report(report, path, meta=None):
    """Write the report JSON; ``meta`` typically echoes the configuration."""
    payload = report.to_dict()
    if meta is not None:
        payload["meta"] = meta
    write_json(path, payload)
    LOGGER.info("wrote hunt report to {}".format(path))
