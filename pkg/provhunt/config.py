"""
Configuration registry and logger setup.

Every tunable value is declared once in ``_valid_options``. The process-wide
``options`` object resolves it from, in increasing priority, the registry
default, an INI file passed explicitly, an environment variable named
``PROVHUNT_<SECTION>_<NAME>`` and values set in code (the command line).
Nothing is read from or written to the user's home directory.
"""
import configparser
import logging
import os
import warnings

from .util import ConfigError, _make_list

ENV_PREFIX = "PROVHUNT"

_LOG_LEVELS = ["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "NOTSET"]


class Option:
    __slots__ = ["name", "default", "doc", "validator", "type"]

    def __init__(self, name, default, doc, validator, type=str):
        self.name = name
        self.default = default
        self.doc = doc
        self.validator = validator
        self.type = type

    def convert(self, value):
        if value is None:
            return None
        if self.type is bool:
            return _to_bool(value)
        return self.type(value)

    def __str__(self):
        info = dict(name=self.name, default=self.default, doc=self.doc)
        if self.default is not None:
            msg = "  - {name} (default={default}) : {doc}"
        else:
            msg = "  - {name} : {doc}"

        return msg.format(**info)

    def __repr__(self):
        return self.__str__()


def _to_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: {!r}".format(value))


def _no_validation(x):
    pass


def _member_validation(allowed):
    def func(val):
        if val not in allowed:
            msg = "Value {} not allowed. Acceptable values are {}"
            raise ConfigError(msg.format(val, allowed))

    return func


def _range_validation(lo=None, hi=None, lo_open=False, hi_open=False):
    def func(val):
        bad = False
        if lo is not None:
            bad |= val <= lo if lo_open else val < lo
        if hi is not None:
            bad |= val >= hi if hi_open else val > hi
        if bad:
            msg = "Value {} outside of the allowed range {}{}, {}{}"
            raise ConfigError(msg.format(
                val, "(" if lo_open else "[", lo, hi, ")" if hi_open else "]"
            ))

    return func


_positive = _range_validation(0, None, lo_open=True)
_at_least_one = _range_validation(1)


# dict holding all config options. Maps from section name to a list of
# options
_valid_options = {
    "PATHS": [
        Option(
            "abs_rules",
            "",
            "Abstraction rules file; empty means the packaged default",
            _no_validation
        ),
        Option(
            "poi_patterns",
            "",
            "POI pattern file; empty means the packaged default",
            _no_validation
        ),
    ],
    "options": [
        Option(
            "file_format",
            "csv",
            "File format for tabular benchmark output",
            _member_validation(["pkl", "csv", "feather"])
        ),
        Option(
            "log_level",
            "WARNING",
            "Default level for filtering logging messages",
            _member_validation(_LOG_LEVELS)
        ),
        Option(
            "seed",
            7,
            "Global seed used when a stage has no seed of its own",
            _range_validation(0),
            int
        ),
    ],
    "ingest": [
        Option(
            "window_ms",
            300000,
            "Tumbling window for network event deduplication (S2)",
            _positive,
            int
        ),
        Option("s1", True, "Collapse repeated event runs", _no_validation,
               bool),
        Option("s2", True, "Collapse repeated network events per window",
               _no_validation, bool),
    ],
    "ppg": [
        Option(
            "versioning",
            False,
            "Suppress events that do not change the object's version",
            _no_validation,
            bool
        ),
        Option(
            "sparse_queue_cap",
            16,
            "Edges a sparse node may hold before promotion",
            _range_validation(1, 16),
            int
        ),
    ],
    "sampler": [
        Option("k", 2, "Hop limit for non-fork edges", _at_least_one, int),
        Option(
            "max_nodes",
            5000,
            "Safety cap on nodes per threat graph",
            _at_least_one,
            int
        ),
        Option(
            "rules",
            "table3",
            "Interaction rule set",
            _member_validation(["table3", "all"])
        ),
    ],
    "model": [
        Option("d", 128, "Hidden width", _at_least_one, int),
        Option("layers", 3, "Message passing layers", _at_least_one, int),
        Option(
            "gate_degree",
            3,
            "Nodes with degree above this take part in cross-graph attention",
            _range_validation(0),
            int
        ),
        Option(
            "cross_attention",
            True,
            "Enable cross-graph attention messages",
            _no_validation,
            bool
        ),
    ],
    "train": [
        Option("tau", 0.1, "Loss temperature", _positive, float),
        Option("epochs", 100, "Training epochs", _at_least_one, int),
        Option("batch", 16, "Anchors per optimizer step", _at_least_one, int),
        Option("lr", 0.001, "Adam learning rate", _positive, float),
        Option("beta1", 0.9, "Adam first moment decay",
               _range_validation(0, 1, hi_open=True), float),
        Option("beta2", 0.999, "Adam second moment decay",
               _range_validation(0, 1, hi_open=True), float),
        Option("eps", 1e-8, "Adam denominator offset", _positive, float),
        Option(
            "perturb_ratio",
            0.2,
            "Fraction of nodes or edges perturbed for positive pairs",
            _range_validation(0, 1, lo_open=True, hi_open=True),
            float
        ),
        Option("corpus_size", 1500, "Benign graphs sampled for training",
               _at_least_one, int),
        Option("negatives_per_anchor", 1, "Negative partners per anchor",
               _at_least_one, int),
        Option("max_negative_scan", 64,
               "Candidates scanned for a negative before relaxing",
               _at_least_one, int),
        Option("min_nodes", 10, "Smallest accepted training graph",
               _at_least_one, int),
        Option("max_nodes", 30, "Largest accepted training graph",
               _at_least_one, int),
        Option("max_attempts", 50,
               "Seed draws allowed per requested corpus graph",
               _at_least_one, int),
        Option("seed", 7, "Training seed", _range_validation(0), int),
    ],
    "hunt": [
        Option("theta", 0.3, "Threat threshold on cosine scores",
               _no_validation, float),
        Option("stride", 1, "Keep every n-th process as POI when hunting "
               "without indicators", _at_least_one, int),
    ],
    "bench": [
        Option("seed", 7, "Synthetic range seed", _range_validation(0), int),
        Option("events", 100000, "Background events in the synthetic range",
               _at_least_one, int),
        Option("days", 2, "Days covered by the synthetic range",
               _range_validation(1, 31), int),
    ],
}


def _get_option(section, name, warn=False):
    if section not in _valid_options:
        msg = "Unknown config section {}. Valid sections are {}"
        valid = list(_valid_options.keys())
        m = msg.format(section, valid)
        if warn:
            warnings.warn(m)
            return
        raise ConfigError(m)

    for o in _valid_options[section]:
        if o.name == name:
            return o

    msg = "Unknown option {}.{}. Known options are {}"
    valid = [o.name for o in _valid_options[section]]
    m = msg.format(section, name, valid)
    if warn:
        warnings.warn(m)
        return
    raise ConfigError(m)


def _validate_config_setting(section, name, value):
    option = _get_option(section, name)
    try:
        converted = option.convert(value)
    except (TypeError, ValueError) as e:
        msg = "Invalid value {!r} for {}.{} ({})"
        raise ConfigError(msg.format(value, section, name, e))
    option.validator(converted)
    return converted


def env_name(section, name):
    return "{}_{}_{}".format(ENV_PREFIX, section.upper(), name.upper())


# -------------- #
# Convenient API #
# -------------- #

class _DictOptions(object):
    def __init__(self):
        self.vconf = configparser.ConfigParser(interpolation=None)
        self.sources = {}
        self.load_defaults()

    def load_defaults(self):
        self.vconf = configparser.ConfigParser(interpolation=None)
        self.sources = {}
        for (sec, opts) in _valid_options.items():
            self.vconf.add_section(sec)
            for o in opts:
                if o.default is not None:
                    self.vconf.set(sec, o.name, str(o.default))
                    self.sources[(sec, o.name)] = "default"

    reset = load_defaults

    def load_file(self, path):
        """
        Overlay the values of an INI file on the current settings

        Parameters
        ----------
        path : str
            The config file. Unknown sections or options only warn.
        """
        if not os.path.isfile(path):
            raise ConfigError("config file {} does not exist".format(path))

        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as e:
            raise ConfigError("cannot parse {}: {}".format(path, e))

        for section in parser.sections():
            for (name, value) in parser.items(section):
                if _get_option(section, name, warn=True) is None:
                    continue
                self.set_config(section, name, value, source=path)

    def load_env(self, environ=None):
        environ = os.environ if environ is None else environ
        for (sec, opts) in _valid_options.items():
            for o in opts:
                key = env_name(sec, o.name)
                if key in environ:
                    self.set_config(sec, o.name, environ[key], source=key)

    def validate_config(self, warn=False):
        """
        Validate all settings in the config

        Parameters
        ----------
        warn : bool, optional(default=False)
            Indicator for whether the function should warn or raise errors
            when an invalid config value is found. Default is raise
        """
        for (section, opts) in self.vconf.items():
            if section == "DEFAULT":
                continue
            for (name, value) in opts.items():
                try:
                    _validate_config_setting(section, name, value)
                except ConfigError as e:
                    if not warn:
                        raise
                    warnings.warn(str(e))

    def set_config(self, section, name, value, source="override"):
        _validate_config_setting(section, name, value)
        if isinstance(value, bool):
            value = "true" if value else "false"
        self.vconf.set(section, name, str(value))
        self.sources[(section, name)] = source

    def _get_sec_opt(self, key):
        parts = key.split(".")
        if len(parts) != 2:
            raise ValueError("key must have form SECTION.option")

        return parts

    def __setitem__(self, key, val):
        section, name = self._get_sec_opt(key)
        if val is not None:
            self.set_config(section, name, val)

    def __getitem__(self, key):
        section, name = self._get_sec_opt(key)
        option = _get_option(section, name)
        if self.vconf.has_option(section, name):
            return option.convert(self.vconf.get(section, name))

        return option.default

    def effective(self):
        """Resolved configuration as a plain nested dict."""
        out = {}
        for (sec, opts) in _valid_options.items():
            out[sec] = {o.name: self["{}.{}".format(sec, o.name)]
                        for o in opts}
        return out


options = _DictOptions()


def configure(path=None, overrides=None, environ=None):
    """
    Rebuild ``options`` from defaults, a config file, the environment and
    explicit overrides, then validate the result.

    Parameters
    ----------
    path : str or list of str, optional
        INI file(s) overlaid on the defaults, later files winning.

    overrides : dict, optional
        ``{"section.name": value}`` pairs applied last. ``None`` values are
        skipped so unset command line flags fall through.

    environ : mapping, optional
        Environment to read ``PROVHUNT_*`` variables from.

    Returns
    -------
    options : _DictOptions
    """
    options.load_defaults()
    for fn in _make_list(path or []):
        if fn:
            options.load_file(fn)
    options.load_env(environ)
    for (key, value) in (overrides or {}).items():
        if value is not None:
            options[key] = value
    options.validate_config()
    set_log_level(options["options.log_level"])
    return options


def describe_options():
    msg = "provhunt configuration options are:\n\n"
    for (sec, opts) in _valid_options.items():
        msg += sec + "\n"
        for o in opts:
            msg += str(o) + "\n"

        msg += "\n"

    return msg


# --------------------- #
# logging configuration #
# --------------------- #

def setup_logger(module):
    log = logging.getLogger(module)
    log.setLevel(options["options.log_level"])
    return log


def set_log_level(level):
    """Apply ``level`` to every provhunt logger created so far."""
    for (name, log) in logging.Logger.manager.loggerDict.items():
        if name.split(".")[0] == "provhunt" and isinstance(log, logging.Logger):
            log.setLevel(level)
    logging.getLogger("provhunt").setLevel(level)
