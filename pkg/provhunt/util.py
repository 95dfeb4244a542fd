import collections.abc
import json
import os


def _ensure_dir(dirname):
    if dirname and not os.path.isdir(dirname):
        os.makedirs(dirname)


def _make_list(x):
    if isinstance(x, str):
        return [x]

    if isinstance(x, collections.abc.Sequence):
        return list(x)

    if isinstance(x, collections.abc.Iterable):
        return list(x)

    raise ValueError("Don't know how to make {} a list".format(x))


class ProvHuntError(Exception):
    """
    Base class for every failure raised by a pipeline stage.

    ``stage`` names the pipeline stage that failed (``ingest``, ``ppg``,
    ``sample``, ``train``, ...) and is printed by the command line as
    ``error[<stage>]``.
    """
    stage = "runtime"

    def __init__(self, msg, stage=None):
        super(ProvHuntError, self).__init__(msg)
        if stage is not None:
            self.stage = stage


class ConfigError(ProvHuntError):
    stage = "config"


class SchemaError(ProvHuntError):
    stage = "schema"

    def __init__(self, msg, path=None, stage=None):
        if path is not None:
            msg = "{}: {}".format(path, msg)
        super(SchemaError, self).__init__(msg, stage)
        self.path = path


class ParseError(ProvHuntError):
    stage = "ingest"


class CapacityError(ProvHuntError):
    stage = "ppg"


class NumericalError(ProvHuntError):
    stage = "reprnet"


def iter_chunks(l, n):
    """Yield successive n-sized chunks from l."""
    for i in range(0, len(l), n):
        yield l[i:(i + n)]


def write_json(path, payload):
    _ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=False)
        f.write("\n")


def read_json(path, stage=None):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise ProvHuntError("cannot read {}: {}".format(path, e), stage)
    except ValueError as e:
        raise SchemaError("invalid JSON ({})".format(e), path=path, stage=stage)
