from .graph import (
    AttrGraph, AttrEdge, to_attr_graph, load_graph, save_graph,
    load_query_dir
)
from .pois import (
    PoiPattern, PoiSet, PoiMatch, match_pois, load_patterns,
    default_patterns, save_pois, load_pois, DEFAULT_PATTERNS_FILE
)

__all__ = [
    "AttrGraph", "AttrEdge", "to_attr_graph", "load_graph", "save_graph",
    "load_query_dir", "PoiPattern", "PoiSet", "PoiMatch", "match_pois",
    "load_patterns", "default_patterns", "save_pois", "load_pois",
    "DEFAULT_PATTERNS_FILE"
]
