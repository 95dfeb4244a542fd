from .core import TrainConfig, TrainResult, Adam, train, pair_separation
from .loss import contrastive_loss
from .ged import (
    approx_ged, cost_matrix, mapping_cost, ged_threshold, is_negative_pair
)
from .augment import augment, perturb_edges, drop_nodes, graft_nodes
from .corpus import (
    TrainCorpus, sample_benign_corpus, build_pairs, build_corpus, HOPS
)

__all__ = [
    "TrainConfig", "TrainResult", "Adam", "train", "pair_separation",
    "contrastive_loss", "approx_ged", "cost_matrix", "mapping_cost",
    "ged_threshold", "is_negative_pair", "augment", "perturb_edges",
    "drop_nodes", "graft_nodes", "TrainCorpus", "sample_benign_corpus",
    "build_pairs", "build_corpus", "HOPS"
]
