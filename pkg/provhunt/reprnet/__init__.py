from .features import GraphFeatures, init_features, EDGE_DIM
from .core import (
    ReprModel, forward_pair, backward_pair, embed, cosine, cosine_grad,
    PARAM_KINDS
)
from .checkpoint import save_model, load_model, model_hash

__all__ = [
    "GraphFeatures", "init_features", "EDGE_DIM", "ReprModel",
    "forward_pair", "backward_pair", "embed", "cosine", "cosine_grad",
    "PARAM_KINDS", "save_model", "load_model", "model_hash"
]
