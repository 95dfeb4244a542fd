from .codec import (
    BitLayout, NODE_HEADER, SPARSE_SUBJECT, SPARSE_OBJECT, EXTENDED_SUBJECT,
    EXTENDED_SUBJECT_AUX, EXTENDED_OBJECT, DAY_MS, SPARSE_CAP, EDGE_BYTES,
    pack_subject_edge, unpack_subject_edge, pack_object_edge,
    unpack_object_edge
)
from .core import (
    Ppg, PpgSnapshot, InsertResult, Direction, Order, Role, Neighbor,
    NodeView, Edge, build_ppg, FIXED_OVERHEAD_BYTES
)
from .checkpoint import save_ppg, load_ppg

__all__ = [
    "BitLayout", "NODE_HEADER", "SPARSE_SUBJECT", "SPARSE_OBJECT",
    "EXTENDED_SUBJECT", "EXTENDED_SUBJECT_AUX", "EXTENDED_OBJECT", "DAY_MS",
    "SPARSE_CAP", "EDGE_BYTES", "pack_subject_edge", "unpack_subject_edge",
    "pack_object_edge", "unpack_object_edge", "Ppg", "PpgSnapshot",
    "InsertResult", "Direction", "Order", "Role", "Neighbor", "NodeView",
    "Edge", "build_ppg", "FIXED_OVERHEAD_BYTES", "save_ppg", "load_ppg"
]
