"""
Contrastive training of the representation model.
"""
import numpy as np
import pandas as pd

from ..config import options, setup_logger
from ..reprnet import ReprModel, backward_pair, forward_pair, init_features
from ..util import NumericalError, ProvHuntError, iter_chunks
from .loss import contrastive_loss

LOGGER = setup_logger(__name__)

_FIELDS = [
    ("tau", float), ("epochs", int), ("batch", int), ("lr", float),
    ("beta1", float), ("beta2", float), ("eps", float),
    ("perturb_ratio", float), ("corpus_size", int),
    ("negatives_per_anchor", int), ("max_negative_scan", int),
    ("min_nodes", int), ("max_nodes", int), ("max_attempts", int),
    ("seed", int),
]


class TrainConfig(object):
    """
    Training hyperparameters

    Every field defaults to the matching ``train.<field>`` option.

    Parameters
    ----------
    tau : float
        Loss temperature, positive.

    epochs, batch : int

    lr, beta1, beta2, eps : float
        Adam settings.

    perturb_ratio : float
        Share of edges or nodes changed for positives, in (0, 1).

    corpus_size : int

    negatives_per_anchor, max_negative_scan : int

    min_nodes, max_nodes : int
        Accepted corpus graph sizes.

    max_attempts : int
        Seed draws allowed per requested corpus graph.

    seed : int
    """
    __slots__ = [name for (name, _) in _FIELDS]

    def __init__(self, **kwargs):
        unknown = set(kwargs) - set(self.__slots__)
        if unknown:
            msg = "Unknown training settings {}. Known settings are {}"
            raise ValueError(msg.format(sorted(unknown), self.__slots__))
        for (name, kind) in _FIELDS:
            value = kwargs.get(name)
            if value is None:
                value = options["train." + name]
            setattr(self, name, kind(value))
        self._validate()

    def _validate(self):
        problems = []
        if self.tau <= 0:
            problems.append("tau must be positive")
        if not 0 < self.perturb_ratio < 1:
            problems.append("perturb_ratio must be in (0, 1)")
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            problems.append("beta1 and beta2 must be in [0, 1)")
        if self.min_nodes > self.max_nodes:
            problems.append("min_nodes exceeds max_nodes")
        for name in ("epochs", "batch", "corpus_size", "negatives_per_anchor",
                     "max_negative_scan", "min_nodes", "max_attempts"):
            if getattr(self, name) < 1:
                problems.append(name + " must be at least 1")
        if self.lr <= 0 or self.eps <= 0:
            problems.append("lr and eps must be positive")
        if problems:
            raise ValueError("Invalid training settings: " + "; ".join(problems))

    @classmethod
    def from_options(cls, opts=None, **kwargs):
        opts = options if opts is None else opts
        settings = {name: opts["train." + name] for (name, _) in _FIELDS}
        settings.update(kwargs)
        return cls(**settings)

    def as_dict(self):
        return {s: getattr(self, s) for s in self.__slots__}

    def __repr__(self):
        return "TrainConfig({})".format(self.as_dict())


class Adam(object):
    """
    Bias-corrected adaptive moment updates applied in place

    Parameters
    ----------
    params : dict
        Name to ndarray; the arrays are updated in place.
    """

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for (k, v) in params.items()}
        self.v = {k: np.zeros_like(v) for (k, v) in params.items()}

    def step(self, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for (k, g) in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            self.params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class TrainResult(object):
    """
    Attributes
    ----------
    model : ReprModel

    curve : pandas.DataFrame
        Columns ``epoch`` and ``loss`` (mean loss over the anchors).

    relaxed : int
        Negative pairs below the distance threshold.
    """

    def __init__(self, model, curve, relaxed=0):
        self.model = model
        self.curve = curve
        self.relaxed = relaxed

    @property
    def first_loss(self):
        return float(self.curve["loss"].iloc[0])

    @property
    def final_loss(self):
        return float(self.curve["loss"].iloc[-1])

    def summary(self):
        return {"epochs": int(len(self.curve)),
                "first_loss": self.first_loss,
                "final_loss": self.final_loss, "relaxed": self.relaxed}


def _prepare(corpus):
    feats = [init_features(g) for g in corpus.graphs]
    pos = {i: init_features(p) for (i, p) in corpus.positives}
    negs = {}
    for i in sorted(pos):
        negs[i] = corpus.negatives_of(i)
        if not negs[i]:
            msg = "anchor {} has no negative partner".format(i)
            raise ProvHuntError(msg, "train")
    return feats, pos, negs


def _batch_step(model, batch, feats, pos, negs, tau):
    pos_scores, pos_traces = [], []
    neg_scores, neg_traces = [], []
    for i in batch:
        _, _, s, trace = forward_pair(model, feats[i], pos[i],
                                      return_trace=True)
        pos_scores.append(s)
        pos_traces.append(trace)
        scores, traces = [], []
        for j in negs[i]:
            _, _, s, trace = forward_pair(model, feats[i], feats[j],
                                          return_trace=True)
            scores.append(s)
            traces.append(trace)
        neg_scores.append(scores)
        neg_traces.append(traces)

    loss, d_pos, d_negs = contrastive_loss(pos_scores, neg_scores, tau)
    grads = model.zero_grads()
    for (k, i) in enumerate(batch):
        pairs = [(pos_traces[k], d_pos[k])] + list(zip(neg_traces[k],
                                                       d_negs[k]))
        for (trace, d) in pairs:
            for (name, g) in backward_pair(model, trace, d_score=d).items():
                grads[name] += g
    return loss, grads


def train(cfg, corpus, model=None):
    """
    Fit ``model`` on a paired corpus

    Parameters
    ----------
    cfg : TrainConfig or None

    corpus : TrainCorpus

    model : ReprModel, optional
        Trained in place; a fresh model seeded with ``cfg.seed`` otherwise.

    Returns
    -------
    result : TrainResult

    Raises
    ------
    NumericalError
        When an activation, gradient or the loss stops being finite; the
        message names the epoch and batch.
    """
    cfg = TrainConfig() if cfg is None else cfg
    model = ReprModel.from_options(seed=cfg.seed) if model is None else model
    feats, pos, negs = _prepare(corpus)
    anchors = sorted(pos)
    opt = Adam(model.params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    rng = np.random.default_rng(cfg.seed)

    rows = []
    for epoch in range(1, cfg.epochs + 1):
        order = [anchors[i] for i in rng.permutation(len(anchors))]
        total = 0.0
        for (b, batch) in enumerate(iter_chunks(order, cfg.batch)):
            try:
                loss, grads = _batch_step(model, batch, feats, pos, negs,
                                          cfg.tau)
            except NumericalError as e:
                msg = "epoch {} batch {} (anchors {}): {}".format(
                    epoch, b, batch, e)
                raise NumericalError(msg, "train")
            opt.step(grads)
            total += loss * len(batch)
        mean = total / len(anchors)
        rows.append((epoch, mean))
        LOGGER.info("epoch {} loss {:.6f}".format(epoch, mean))

    curve = pd.DataFrame(rows, columns=["epoch", "loss"])
    return TrainResult(model, curve, len(corpus.relaxed))


def pair_separation(model, corpus):
    """
    Mean positive similarity minus mean negative similarity

    Parameters
    ----------
    model : ReprModel

    corpus : TrainCorpus
        Typically held out from training.

    Returns
    -------
    gap : float
    """
    feats, pos, negs = _prepare(corpus)
    pos_scores = [forward_pair(model, feats[i], pos[i])[2] for i in sorted(pos)]
    neg_scores = [forward_pair(model, feats[i], feats[j])[2]
                  for i in sorted(negs) for j in negs[i]]
    return float(np.mean(pos_scores) - np.mean(neg_scores))
