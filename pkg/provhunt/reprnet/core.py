"""
Graph-pair representation model.

Every layer runs intra-graph message passing, then attention messages
between the high-degree nodes of the two graphs, then a two-layer MLP
update. Graphs are read out by sum pooling and compared by cosine
similarity. Forward and backward passes are written out in numpy.
"""
import collections

import numpy as np

from ..config import options, setup_logger
from ..util import NumericalError
from ..vocab import N_ABS_TYPES
from .features import EDGE_DIM

LOGGER = setup_logger(__name__)

PARAM_KINDS = ["w_intra", "w1", "b1", "w2", "b2"]


def _key(layer, kind):
    return "l{}.{}".format(layer, kind)


class ReprModel(object):
    """
    Parameters
    ----------
    d : int, optional
        Hidden width. Defaults to ``model.d``.

    layers : int, optional
        Defaults to ``model.layers``.

    gate_degree : int, optional
        Only nodes with degree above this exchange attention messages.
        Defaults to ``model.gate_degree``.

    cross_attention : bool, optional
        False gives the intra-graph only variant. Defaults to
        ``model.cross_attention``.

    seed : int, optional
        Seed of the uniform initialization. Defaults to ``train.seed``.

    Attributes
    ----------
    params : OrderedDict
        ``"l{i}.w_intra"`` of shape ``(2 * d_in + 17, d)``, ``"l{i}.w1"``
        ``(2d, d)``, ``"l{i}.b1"`` ``(d,)``, ``"l{i}.w2"`` ``(d, d)`` and
        ``"l{i}.b2"`` ``(d,)`` per layer, where ``d_in`` is 14 for the first
        layer and ``d`` afterwards. Every entry is drawn from
        ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``.
    """

    def __init__(self, d=None, layers=None, gate_degree=None,
                 cross_attention=None, seed=None):
        self.d = options["model.d"] if d is None else int(d)
        self.layers = options["model.layers"] if layers is None else int(layers)
        self.gate_degree = options["model.gate_degree"] \
            if gate_degree is None else int(gate_degree)
        self.cross_attention = options["model.cross_attention"] \
            if cross_attention is None else bool(cross_attention)
        self.seed = options["train.seed"] if seed is None else int(seed)
        if self.d < 1 or self.layers < 1:
            msg = "d and layers must be positive, got d={} layers={}"
            raise ValueError(msg.format(self.d, self.layers))
        if self.gate_degree < 0:
            msg = "gate_degree must be non-negative, got {}"
            raise ValueError(msg.format(self.gate_degree))

        rng = np.random.default_rng(self.seed)
        self.params = collections.OrderedDict()
        d_in = N_ABS_TYPES
        for i in range(self.layers):
            for (kind, shape, fan_in) in self._layer_shapes(d_in):
                bound = 1.0 / np.sqrt(fan_in)
                self.params[_key(i, kind)] = rng.uniform(-bound, bound, shape)
            d_in = self.d

    def _layer_shapes(self, d_in):
        d = self.d
        return [
            ("w_intra", (2 * d_in + EDGE_DIM, d), 2 * d_in + EDGE_DIM),
            ("w1", (2 * d, d), 2 * d),
            ("b1", (d,), 2 * d),
            ("w2", (d, d), d),
            ("b2", (d,), d),
        ]

    @classmethod
    def from_options(cls, opts=None, **kwargs):
        opts = options if opts is None else opts
        settings = dict(d=opts["model.d"], layers=opts["model.layers"],
                        gate_degree=opts["model.gate_degree"],
                        cross_attention=opts["model.cross_attention"],
                        seed=opts["train.seed"])
        settings.update(kwargs)
        return cls(**settings)

    def hyperparameters(self):
        return {"d": self.d, "layers": self.layers,
                "gate_degree": self.gate_degree,
                "cross_attention": self.cross_attention, "seed": self.seed}

    def n_parameters(self):
        return int(sum(p.size for p in self.params.values()))

    def layer(self, i):
        return [self.params[_key(i, kind)] for kind in PARAM_KINDS]

    def zero_grads(self):
        return collections.OrderedDict(
            (k, np.zeros_like(v)) for (k, v) in self.params.items())

    def copy(self):
        out = ReprModel(**self.hyperparameters())
        for (k, v) in self.params.items():
            out.params[k] = v.copy()
        return out

    def __repr__(self):
        msg = "ReprModel(d={}, layers={}, gate_degree={}, cross_attention={}, " \
              "parameters={})"
        return msg.format(self.d, self.layers, self.gate_degree,
                          self.cross_attention, self.n_parameters())


def _check(name, x):
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite values in {}".format(name))


def _softmax(s):
    s = s - s.max(axis=1, keepdims=True)
    ex = np.exp(s)
    return ex / ex.sum(axis=1, keepdims=True)


def cosine(a, b):
    """Cosine similarity clipped to [-1, 1]; 0 when either vector is zero."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def cosine_grad(a, b):
    """
    Gradients of ``cosine(a, b)`` with respect to ``a`` and ``b``

    Returns
    -------
    ga, gb : ndarray
        Both zero when either vector is zero.
    """
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return np.zeros_like(a), np.zeros_like(b)
    c = np.dot(a, b) / (na * nb)
    ga = b / (na * nb) - c * a / na ** 2
    gb = a / (na * nb) - c * b / nb ** 2
    return ga, gb


def _intra(f, h, w):
    msgs = np.concatenate([h[f.tgt], h[f.src], f.e], axis=1)
    agg = np.zeros((f.n_nodes, msgs.shape[1]))
    np.add.at(agg, f.tgt, msgs)
    z = agg @ w
    return agg, z, np.maximum(z, 0.0)


def _update(hp, mu, w1, b1, w2, b2):
    c = np.concatenate([hp, mu], axis=1)
    u = c @ w1 + b1
    r = np.maximum(u, 0.0)
    return c, u, r, r @ w2 + b2


def _attention(hq, hp, gq, gp):
    q, p = hq[gq], hp[gp]
    s = q @ p.T
    att_q = _softmax(s)
    att_p = _softmax(s.T)
    mu_q = np.zeros_like(hq)
    mu_p = np.zeros_like(hp)
    mu_q[gq] = att_q @ p
    mu_p[gp] = att_p @ q
    return mu_q, mu_p, att_q, att_p


def _forward(model, feats, pair):
    trace = []
    hs = [f.x for f in feats]
    gates = [f.gated(model.gate_degree) for f in feats]
    for i in range(model.layers):
        w_intra, w1, b1, w2, b2 = model.layer(i)
        step = {"h": hs, "intra": [], "update": [], "att": None}
        hps = []
        for (f, h) in zip(feats, hs):
            agg, z, hp = _intra(f, h, w_intra)
            _check("layer {} intra activations".format(i), hp)
            step["intra"].append((agg, z))
            hps.append(hp)

        mus = [np.zeros_like(hp) for hp in hps]
        if pair and model.cross_attention and all(len(g) for g in gates):
            mu_q, mu_p, att_q, att_p = _attention(hps[0], hps[1], *gates)
            _check("layer {} attention".format(i), mu_q)
            _check("layer {} attention".format(i), mu_p)
            mus = [mu_q, mu_p]
            step["att"] = (att_q, att_p)

        hs = []
        for (hp, mu) in zip(hps, mus):
            c, u, r, hn = _update(hp, mu, w1, b1, w2, b2)
            _check("layer {} node features".format(i), hn)
            step["update"].append((c, u, r))
            hs.append(hn)
        step["hp"] = hps
        trace.append(step)
    embs = [h.sum(axis=0) for h in hs]
    return embs, {"feats": feats, "gates": gates, "layers": trace,
                  "emb": embs}


def forward_pair(model, fq, fp, return_trace=False):
    """
    Embed two graphs jointly and score them

    Parameters
    ----------
    model : ReprModel

    fq, fp : GraphFeatures
        Both non-empty.

    return_trace : bool
        Also return the intermediate values ``backward_pair`` needs.

    Returns
    -------
    eq, ep : ndarray, shape (d,)

    score : float
        Cosine similarity of the two embeddings.

    trace : dict
        Only with ``return_trace``.

    Raises
    ------
    NumericalError
        On NaN or infinite activations.
    """
    for f in (fq, fp):
        if f.n_nodes == 0:
            raise ValueError("forward_pair needs non-empty graphs")
    (eq, ep), trace = _forward(model, [fq, fp], pair=True)
    score = cosine(eq, ep)
    if return_trace:
        return eq, ep, score, trace
    return eq, ep, score


def embed(model, f):
    """
    Embedding of a single graph

    No partner graph means no attention messages; the result equals the
    embedding ``forward_pair`` computes when attention is disabled.
    """
    if f.n_nodes == 0:
        raise ValueError("embed needs a non-empty graph")
    (emb,), _ = _forward(model, [f], pair=False)
    return emb


def _attention_backward(hq, hp, gq, gp, att_q, att_p, g_mu_q, g_mu_p):
    q, p = hq[gq], hp[gp]
    gq_out = np.zeros_like(q)
    gp_out = np.zeros_like(p)
    # mu = softmax(a @ b.T) @ b for both directions
    for (a, b, att, g, ga, gb) in ((q, p, att_q, g_mu_q[gq], gq_out, gp_out),
                                   (p, q, att_p, g_mu_p[gp], gp_out, gq_out)):
        g_att = g @ b.T
        gb += att.T @ g
        g_s = att * (g_att - (g_att * att).sum(axis=1, keepdims=True))
        ga += g_s @ b
        gb += g_s.T @ a
    out_q = np.zeros_like(hq)
    out_p = np.zeros_like(hp)
    out_q[gq] = gq_out
    out_p[gp] = gp_out
    return out_q, out_p


def backward_pair(model, trace, d_score=0.0, d_eq=None, d_ep=None):
    """
    Parameter gradients of a scalar loss through one ``forward_pair``

    Parameters
    ----------
    model : ReprModel
        The model the trace was recorded with.

    trace : dict
        From ``forward_pair(..., return_trace=True)``.

    d_score : float
        Gradient of the loss with respect to the score.

    d_eq, d_ep : ndarray, optional
        Gradients with respect to the embeddings, added to the ones
        flowing from ``d_score``.

    Returns
    -------
    grads : OrderedDict
        Same keys and shapes as ``model.params``.
    """
    eq, ep = trace["emb"]
    gq, gp = cosine_grad(eq, ep)
    g_emb = [d_score * gq, d_score * gp]
    if d_eq is not None:
        g_emb[0] = g_emb[0] + d_eq
    if d_ep is not None:
        g_emb[1] = g_emb[1] + d_ep

    feats = trace["feats"]
    grads = model.zero_grads()
    g_h = [np.broadcast_to(g, (f.n_nodes, g.shape[0])).copy()
           for (f, g) in zip(feats, g_emb)]
    for i in reversed(range(model.layers)):
        step = trace["layers"][i]
        w_intra, w1, b1, w2, b2 = model.layer(i)
        g_hp, g_mu = [], []
        for (g_hn, (c, u, r)) in zip(g_h, step["update"]):
            grads[_key(i, "w2")] += r.T @ g_hn
            grads[_key(i, "b2")] += g_hn.sum(axis=0)
            g_u = (g_hn @ w2.T) * (u > 0)
            grads[_key(i, "w1")] += c.T @ g_u
            grads[_key(i, "b1")] += g_u.sum(axis=0)
            g_c = g_u @ w1.T
            g_hp.append(g_c[:, :model.d].copy())
            g_mu.append(g_c[:, model.d:])

        if step["att"] is not None:
            extra_q, extra_p = _attention_backward(
                step["hp"][0], step["hp"][1], trace["gates"][0],
                trace["gates"][1], step["att"][0], step["att"][1],
                g_mu[0], g_mu[1])
            g_hp[0] += extra_q
            g_hp[1] += extra_p

        g_h = []
        for (f, h, g, (agg, z)) in zip(feats, step["h"], g_hp, step["intra"]):
            g_z = g * (z > 0)
            grads[_key(i, "w_intra")] += agg.T @ g_z
            if i == 0:
                continue
            d_in = h.shape[1]
            g_msg = (g_z @ w_intra.T)[f.tgt]
            g_in = np.zeros_like(h)
            np.add.at(g_in, f.tgt, g_msg[:, :d_in])
            np.add.at(g_in, f.src, g_msg[:, d_in:2 * d_in])
            g_h.append(g_in)

    for (k, g) in grads.items():
        _check("gradient of " + k, g)
    return grads
