from .core import (
    EntityKind, EventDir, EdgeOp, AbsType, abs_sets, ops_for_kind,
    normalize_name, parse_address, N_ABS_TYPES, N_OP_CODES, CATCH_ALL
)
from .rules import (
    AbstractionRules, NameMatcher, abstract_node, default_rules, load_rules,
    DEFAULT_RULES_FILE
)

__all__ = [
    "EntityKind", "EventDir", "EdgeOp", "AbsType", "abs_sets",
    "ops_for_kind", "normalize_name", "parse_address", "N_ABS_TYPES",
    "N_OP_CODES", "CATCH_ALL", "AbstractionRules", "NameMatcher",
    "abstract_node", "default_rules", "load_rules", "DEFAULT_RULES_FILE"
]
