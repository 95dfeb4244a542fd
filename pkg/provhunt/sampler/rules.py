"""
Interaction rules deciding which edges of a visited node are sampled.

Rules are grouped by the prerequisite on the visited node ``v`` (its kind,
abstract type and explosion flag); at most one group applies and the first
rule of the group whose event clause matches the neighbour ``u`` and the
operation wins.
"""
from ..vocab import AbsType, EdgeOp, abs_sets

RULE_SETS = ["table3", "all"]

# rule id reported when the unfiltered rule set admits an edge
ANY_RULE = "any"

P, F, N = abs_sets()

_NETWORK = frozenset([EdgeOp.SEND, EdgeOp.RECV])
_MUTATE = frozenset([EdgeOp.MODIFY, EdgeOp.WRITE, EdgeOp.LINK, EdgeOp.RENAME])
_SYS_LIB = frozenset([AbsType.SYS_FILE, AbsType.LIB_FILE])
_SYS_LIB_CFG = frozenset([AbsType.SYS_FILE, AbsType.LIB_FILE, AbsType.CFG_FILE])
_SYS_SERV = frozenset([AbsType.SYS_PROCESS, AbsType.SERV_PROCESS])


def _explosive_process(v_abs, u_abs, op):
    if op in _NETWORK and u_abs in N and v_abs is not AbsType.WEB_PROCESS:
        return "R1"
    if op in _MUTATE and u_abs in _SYS_LIB:
        return "R5"
    if op is EdgeOp.MODIFY and u_abs in _SYS_SERV:
        return "R6"
    if u_abs is AbsType.CFG_FILE:
        return "R7"
    return None


def _sparse_process(v_abs, u_abs, op):
    if op in _NETWORK and u_abs in N:
        return "R2"
    if u_abs in P:
        return "R4"
    if u_abs is not AbsType.UNKNOWN_FILE:
        return "R3"
    return None


def rule_allows(v, u, op, rule_set="table3"):
    """
    Rule admitting the edge between visited node ``v`` and neighbour ``u``

    Parameters
    ----------
    v : NodeView
        ``(abs, exp)`` of the visited node.

    u : NodeView or AbsType
        The neighbour; only its abstract type is consulted.

    op : EdgeOp

    rule_set : {"table3", "all"}
        ``all`` admits every edge.

    Returns
    -------
    rule : str or None
        ``"R1"`` .. ``"R10"``, or None when no rule admits the edge.
    """
    if rule_set == "all":
        return ANY_RULE
    if rule_set != "table3":
        msg = "Unknown rule set {}. Known rule sets are {}"
        raise ValueError(msg.format(rule_set, RULE_SETS))

    v_abs = v.abs
    u_abs = u if isinstance(u, AbsType) else u.abs
    op = op.canonical

    if v_abs in P:
        if v.exp:
            return _explosive_process(v_abs, u_abs, op)
        return _sparse_process(v_abs, u_abs, op)

    if v_abs in F:
        if v.exp:
            if v_abs in _SYS_LIB_CFG and op in _MUTATE and u_abs in P:
                return "R8"
            return None
        return "R9" if u_abs in P else None

    if op in _NETWORK and u_abs in P:
        return "R10"
    return None
