"""
Loading and evaluating the name -> abstract type rules.
"""
import configparser
import fnmatch
import functools
import ipaddress
import os

from ..config import options, setup_logger
from ..util import ConfigError
from .core import (
    AbsType, EntityKind, CATCH_ALL, normalize_name, parse_address
)

LOGGER = setup_logger(__name__)

DEFAULT_RULES_FILE = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), "default_rules.ini"
)

_GLOB_CHARS = set("*?[")


class NameMatcher:
    """
    One pattern compiled for a kind; called with a normalized name and a
    parsed address (netflows only).
    """
    __slots__ = ["kind", "pattern", "_test"]

    def __init__(self, kind, pattern):
        self.kind = kind
        self.pattern = pattern
        if kind is EntityKind.NETFLOW:
            net = ipaddress.ip_network(pattern, strict=False)
            self._test = lambda name, addr: addr is not None and \
                addr.version == net.version and addr in net
        elif _GLOB_CHARS & set(pattern):
            self._test = lambda name, addr: fnmatch.fnmatchcase(name, pattern)
        elif kind is EntityKind.PROCESS:
            self._test = lambda name, addr: \
                name == pattern or name.rsplit(".", 1)[0] == pattern
        elif pattern.startswith("/") or ":" in pattern:
            prefix = pattern.rstrip("/")
            self._test = lambda name, addr: \
                name == prefix or name.startswith(prefix + "/")
        else:
            self._test = lambda name, addr: pattern in name.split("/")

    def __call__(self, name, addr):
        return self._test(name, addr)

    def __repr__(self):
        return "NameMatcher({}, {!r})".format(self.kind.value, self.pattern)


class AbstractionRules:
    """
    Ordered ``(kind, matcher, abs type)`` entries evaluated first-match-wins.

    Parameters
    ----------
    entries : list of (EntityKind, str, AbsType)
        Patterns in evaluation order.

    version : str
        Rule-set version echoed in outputs.
    """

    def __init__(self, entries, version="0", source=None):
        self.version = str(version)
        self.source = source
        self.entries = []
        for (kind, pattern, abs_type) in entries:
            if abs_type.kind is not kind:
                msg = "abstract type {} does not belong to kind {}"
                raise ConfigError(msg.format(abs_type.value, kind.value))
            pattern = normalize_name(EntityKind.FILE, pattern) \
                if kind is not EntityKind.NETFLOW else pattern.strip()
            self.entries.append((kind, NameMatcher(kind, pattern), abs_type))

    def classify(self, kind, name, addr=None):
        if kind is EntityKind.NETFLOW:
            norm = normalize_name(kind, addr if addr is not None else name)
            parsed = parse_address(addr if addr is not None else name)
        else:
            norm = normalize_name(kind, name)
            parsed = None

        for (k, matcher, abs_type) in self.entries:
            if k is kind and matcher(norm, parsed):
                return abs_type

        return CATCH_ALL[kind]

    def __len__(self):
        return len(self.entries)


def _split_patterns(text):
    out = []
    for line in text.splitlines():
        out.extend(p.strip() for p in line.split(","))
    return [p for p in out if p]


def load_rules(path):
    """
    Read an abstraction rules INI file

    Parameters
    ----------
    path : str
        File with a ``[rules]`` section holding ``version`` and one section
        per entity kind mapping abstract type names to pattern lists.

    Returns
    -------
    rules : AbstractionRules
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        read = parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError("cannot parse abstraction rules {}: {}".format(
            path, e))
    if not read:
        raise ConfigError("abstraction rules file {} not found".format(path))

    version = parser.get("rules", "version", fallback="0")
    entries = []
    for kind in EntityKind:
        if not parser.has_section(kind.value):
            continue
        for (name, value) in parser.items(kind.value):
            try:
                abs_type = AbsType(name)
            except ValueError:
                msg = "unknown abstract type {!r} in section [{}] of {}"
                raise ConfigError(msg.format(name, kind.value, path))
            for pattern in _split_patterns(value):
                entries.append((kind, pattern, abs_type))

    LOGGER.debug("Loaded {} abstraction patterns from {}".format(
        len(entries), path))
    return AbstractionRules(entries, version=version, source=path)


@functools.lru_cache(maxsize=8)
def _load_cached(path):
    return load_rules(path)


def default_rules():
    """The rules named by ``PATHS.abs_rules``, or the packaged ones."""
    path = options["PATHS.abs_rules"] or DEFAULT_RULES_FILE
    return _load_cached(os.path.abspath(path))


def abstract_node(kind, name, addr=None, rules=None):
    """
    Map a concrete entity to its abstract type

    Parameters
    ----------
    kind : EntityKind

    name : str
        Process image or file path; ignored for netflows with an address.

    addr : str, optional
        Remote address of a netflow.

    rules : AbstractionRules, optional
        Defaults to ``default_rules()``.

    Returns
    -------
    abs_type : AbsType
        Always of the same kind as ``kind``.
    """
    if rules is None:
        rules = default_rules()
    return rules.classify(kind, name, addr)
