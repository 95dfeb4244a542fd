"""
Temperature-scaled contrastive loss over anchor similarities.
"""
import numpy as np
from scipy.special import logsumexp, softmax

from ..util import NumericalError, ProvHuntError


def contrastive_loss(pos, negs, tau):
    """
    Mean over anchors of ``-log(exp(pos/tau) / sum(exp(neg/tau)))``

    Only the negatives enter the denominator.

    Parameters
    ----------
    pos : array_like, shape (N,)
        Similarity of each anchor to its positive partner.

    negs : list of array_like
        Similarities of each anchor to its negative partners.

    tau : float

    Returns
    -------
    loss : float

    d_pos : ndarray, shape (N,)
        Gradient with respect to ``pos``.

    d_negs : list of ndarray
        Gradients with respect to ``negs``.
    """
    if tau <= 0:
        raise ValueError("tau must be positive, got {}".format(tau))
    pos = np.asarray(pos, dtype=float)
    if pos.ndim != 1 or len(pos) != len(negs) or len(pos) == 0:
        msg = "expected one negative list per anchor, got {} anchors and {}"
        raise ValueError(msg.format(pos.shape, len(negs)))

    n = len(pos)
    total = 0.0
    d_negs = []
    for (i, neg) in enumerate(negs):
        neg = np.asarray(neg, dtype=float)
        if neg.size == 0:
            msg = "anchor {} has no negative partner".format(i)
            raise ProvHuntError(msg, "train")
        total -= pos[i] / tau - logsumexp(neg / tau)
        d_negs.append(softmax(neg / tau) / (tau * n))
    loss = total / n
    if not np.isfinite(loss):
        raise NumericalError("non-finite contrastive loss", "train")
    return float(loss), np.full(n, -1.0 / (tau * n)), d_negs
