"""
Named benchmark suites. A suite is a ``_suite_<name>`` function taking the
scenario spec and an output directory and returning a JSON-ready summary;
``run_suite`` writes that summary next to the suite's tables.
"""
import os
import sys

from ..config import options, setup_logger
from ..ppg import build_ppg
from ..reprnet import ReprModel, model_hash, save_model
from ..trainer import TrainConfig, build_corpus, train
from ..util import write_json
from ..version import __version__
from .core import (
    bench_hunt, bench_linear, bench_memory, bench_sampling, write_frame
)
from .scenario import ScenarioSpec, generate, write_scenario

LOGGER = setup_logger(__name__)

# reduced settings of the end-to-end smoke pass
SMOKE_EVENTS = 4000
SMOKE_TRAIN = {"corpus_size": 40, "epochs": 3, "batch": 8,
               "max_negative_scan": 16}
SMOKE_MODEL = {"d": 32, "layers": 2}


def _suite_memory(spec, outdir, **kwargs):
    scenario = generate(spec)
    return bench_memory(scenario.events)


def _suite_linear(spec, outdir, **kwargs):
    return bench_linear(spec)


def _suite_sampling(spec, outdir, **kwargs):
    scenario = generate(spec)
    table = bench_sampling(scenario.events, scenario.labels,
                           scenario.queries)
    fn = write_frame(table, os.path.join(outdir, "sampling"))
    means = table.groupby("k")[["node_cr", "edge_cr", "node_nr",
                                "edge_nr"]].mean()
    return {"table": fn,
            "by_k": {int(k): {c: float(v) for (c, v) in row.items()}
                     for (k, row) in means.iterrows()}}


def train_benign_model(spec, train_cfg=None, model_kwargs=None):
    """
    Train on a benign-only range drawn with the next seed

    Returns
    -------
    result : TrainResult
    """
    benign = ScenarioSpec(spec.seed + 1, spec.events, spec.days, [],
                          spec.users)
    g = build_ppg(generate(benign).events)
    cfg = TrainConfig(**(train_cfg or {}))
    corpus = build_corpus(g, cfg)
    model = ReprModel(seed=cfg.seed, **(model_kwargs or {}))
    return train(cfg, corpus, model)


def _suite_hunt(spec, outdir, model=None, train_cfg=None, model_kwargs=None,
                **kwargs):
    summary = {}
    if model is None:
        result = train_benign_model(spec, train_cfg, model_kwargs)
        model = result.model
        fn = os.path.join(outdir, "model.phrm")
        save_model(model, fn, meta={"train": result.summary()})
        summary["model"] = fn
        summary["train"] = result.summary()
        write_frame(result.curve, os.path.join(outdir, "loss_curve"))
    scenario = generate(spec)
    out = bench_hunt(scenario.events, scenario.labels, scenario.queries,
                     model)
    summary["scores"] = write_frame(out["scores"],
                                    os.path.join(outdir, "scores"))
    summary["model_hash"] = model_hash(model)
    for key in ("metrics", "n_graphs", "n_flagged", "attack_scores",
                "benign_scores"):
        summary[key] = out[key]
    return summary


def _suite_smoke(spec, outdir, **kwargs):
    small = ScenarioSpec(spec.seed, min(spec.events, SMOKE_EVENTS), 1,
                         spec.campaigns)
    paths = write_scenario(generate(small), os.path.join(outdir, "range"))
    return {
        "range": paths,
        "memory": _suite_memory(small, outdir),
        "sampling": _suite_sampling(small, outdir),
        "hunt": _suite_hunt(small, outdir, train_cfg=SMOKE_TRAIN,
                            model_kwargs=SMOKE_MODEL),
    }


def _suite_all(spec, outdir, **kwargs):
    return {name: run_suite(name, spec, outdir, **kwargs)
            for name in ["memory", "linear", "sampling", "hunt"]}


def available():
    """Names of the registered suites."""
    module = sys.modules[__name__]
    return sorted(name[len("_suite_"):] for name in dir(module)
                  if name.startswith("_suite_"))


def run_suite(name, spec=None, outdir="results", **kwargs):
    """
    Run one suite and write ``<outdir>/<name>.json``

    Parameters
    ----------
    name : str
        One of ``available()``.

    spec : ScenarioSpec, optional

    outdir : str

    kwargs
        Passed to the suite, e.g. ``model`` for ``hunt``.

    Returns
    -------
    summary : dict
    """
    func = getattr(sys.modules[__name__], "_suite_" + name, None)
    if func is None:
        msg = "Unknown suite {}. Known suites are {}"
        raise ValueError(msg.format(name, available()))
    spec = ScenarioSpec() if spec is None else spec
    LOGGER.info("running suite {} with {}".format(name, spec))
    summary = func(spec, outdir, **kwargs)
    payload = {"suite": name, "version": __version__,
               "scenario": spec.as_dict(), "config": options.effective(),
               "result": summary}
    write_json(os.path.join(outdir, name + ".json"), payload)
    return summary
