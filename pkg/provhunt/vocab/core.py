"""
Vocabulary shared by every stage: entity kinds, edge operations with their
4-bit wire codes, event directions and the abstract node types.
"""
import enum
import ipaddress


class EntityKind(enum.Enum):
    PROCESS = "process"
    FILE = "file"
    NETFLOW = "netflow"


class EventDir(enum.Enum):
    """Direction of information flow of an event, relative to its subject."""
    SBJ_TO_OBJ = "out"
    OBJ_TO_SBJ = "in"

    @property
    def bit(self):
        return 0 if self is EventDir.SBJ_TO_OBJ else 1

    @classmethod
    def from_bit(cls, bit):
        return cls.OBJ_TO_SBJ if bit else cls.SBJ_TO_OBJ


class EdgeOp(enum.Enum):
    FORK = "fork"
    EXEC = "exec"
    MODIFY = "modify"
    OPEN = "open"
    CREATE = "create"
    READ = "read"
    WRITE = "write"
    RENAME = "rename"
    LINK = "link"
    UNLINK = "unlink"
    DELETE = "delete"
    LOAD = "load"
    CONNECT = "connect"
    START = "start"
    SEND = "send"
    RECV = "recv"
    MESSAGE = "message"

    @property
    def code(self):
        return _OP_CODES[self]

    @property
    def canonical(self):
        return _CODE_OPS[_OP_CODES[self]]

    @property
    def default_dir(self):
        if self in _INFLOW_TO_SUBJECT:
            return EventDir.OBJ_TO_SBJ
        return EventDir.SBJ_TO_OBJ

    @classmethod
    def from_code(cls, code):
        try:
            return _CODE_OPS[code]
        except KeyError:
            raise ValueError("unknown edge op code {}".format(code))


# `start` shares the connection-initiation code with `connect`
_OP_CODES = {
    EdgeOp.FORK: 0, EdgeOp.EXEC: 1, EdgeOp.MODIFY: 2, EdgeOp.OPEN: 3,
    EdgeOp.CREATE: 4, EdgeOp.READ: 5, EdgeOp.WRITE: 6, EdgeOp.RENAME: 7,
    EdgeOp.LINK: 8, EdgeOp.UNLINK: 9, EdgeOp.DELETE: 10, EdgeOp.LOAD: 11,
    EdgeOp.CONNECT: 12, EdgeOp.START: 12, EdgeOp.SEND: 13, EdgeOp.RECV: 14,
    EdgeOp.MESSAGE: 15,
}
_CODE_OPS = {}
for _op, _code in _OP_CODES.items():
    _CODE_OPS.setdefault(_code, _op)

N_OP_CODES = 16

_INFLOW_TO_SUBJECT = frozenset([EdgeOp.READ, EdgeOp.LOAD, EdgeOp.RECV])

_OPS_BY_KIND = {
    EntityKind.PROCESS: frozenset([
        EdgeOp.FORK, EdgeOp.EXEC, EdgeOp.MODIFY, EdgeOp.OPEN
    ]),
    EntityKind.FILE: frozenset([
        EdgeOp.CREATE, EdgeOp.READ, EdgeOp.WRITE, EdgeOp.RENAME, EdgeOp.LINK,
        EdgeOp.UNLINK, EdgeOp.MODIFY, EdgeOp.DELETE, EdgeOp.LOAD
    ]),
    EntityKind.NETFLOW: frozenset([
        EdgeOp.CONNECT, EdgeOp.START, EdgeOp.SEND, EdgeOp.RECV,
        EdgeOp.MESSAGE
    ]),
}


def ops_for_kind(kind):
    """Operations a process may perform on an object of ``kind``."""
    return _OPS_BY_KIND[kind]


class AbsType(enum.Enum):
    SYS_PROCESS = "sys_process"
    USR_PROCESS = "usr_process"
    SERV_PROCESS = "serv_process"
    UTIL_PROCESS = "util_process"
    WEB_PROCESS = "web_process"
    UNKNOWN_PROCESS = "unknown_process"
    LIB_FILE = "lib_file"
    SYS_FILE = "sys_file"
    CFG_FILE = "cfg_file"
    USR_FILE = "usr_file"
    TMP_FILE = "tmp_file"
    UNKNOWN_FILE = "unknown_file"
    PRIVATE_NETFLOW = "private_netflow"
    PUBLIC_NETFLOW = "public_netflow"

    @property
    def code(self):
        return _ABS_CODES[self]

    @property
    def kind(self):
        return _ABS_KIND[self]

    @classmethod
    def from_code(cls, code):
        try:
            return _ABS_ORDER[code]
        except IndexError:
            raise ValueError("unknown abstract type code {}".format(code))


_ABS_ORDER = list(AbsType)
_ABS_CODES = {a: i for (i, a) in enumerate(_ABS_ORDER)}
_ABS_KIND = {}
for _a in _ABS_ORDER:
    if _a.value.endswith("_process"):
        _ABS_KIND[_a] = EntityKind.PROCESS
    elif _a.value.endswith("_file"):
        _ABS_KIND[_a] = EntityKind.FILE
    else:
        _ABS_KIND[_a] = EntityKind.NETFLOW

N_ABS_TYPES = len(_ABS_ORDER)

CATCH_ALL = {
    EntityKind.PROCESS: AbsType.UNKNOWN_PROCESS,
    EntityKind.FILE: AbsType.UNKNOWN_FILE,
    EntityKind.NETFLOW: AbsType.PUBLIC_NETFLOW,
}

_P = frozenset(a for a in _ABS_ORDER if _ABS_KIND[a] is EntityKind.PROCESS)
_F = frozenset(a for a in _ABS_ORDER if _ABS_KIND[a] is EntityKind.FILE)
_N = frozenset(a for a in _ABS_ORDER if _ABS_KIND[a] is EntityKind.NETFLOW)


def abs_sets():
    """
    Partition of the abstract types by entity kind

    Returns
    -------
    P, F, N : frozenset
        Process, file and netflow abstract types.
    """
    return _P, _F, _N


def parse_address(text):
    """
    Parse ``ip``, ``ip:port`` or ``[ipv6]:port``; None when unparseable.
    """
    if text is None:
        return None
    text = str(text).strip()
    if not text:
        return None
    if text.startswith("["):
        text = text[1:].split("]", 1)[0]
    elif text.count(":") == 1:
        text = text.split(":", 1)[0]
    try:
        return ipaddress.ip_address(text)
    except ValueError:
        return None


def normalize_name(kind, name):
    """
    Canonical form of an entity name used for matching and merging.

    Lowercase with forward slashes; processes reduce to their basename and
    netflows to the bare address.
    """
    text = str(name).strip().replace("\\", "/").lower()
    if kind is EntityKind.PROCESS:
        return text.rstrip("/").rsplit("/", 1)[-1]
    if kind is EntityKind.NETFLOW:
        addr = parse_address(text)
        return str(addr) if addr is not None else text
    return text
