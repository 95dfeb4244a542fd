"""
Binary model checkpoint.

Layout, integers little-endian::

    magic    4s   b"PHRM"
    header   <HQ  format version, length of the JSON block
    json          UTF-8: hyperparameters (with the seed), parameter names
                  and shapes in storage order, caller metadata
    arrays        each parameter as little-endian float64, row-major
"""
import hashlib
import json
import os
import struct

import numpy as np

from ..util import ProvHuntError, SchemaError, _ensure_dir
from .core import ReprModel

MAGIC = b"PHRM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<HQ")
_DTYPE = np.dtype("<f8")


def _payload(model, meta=None):
    header = {
        "hyperparameters": model.hyperparameters(),
        "params": [[k, list(v.shape)] for (k, v) in model.params.items()],
        "meta": meta or {},
    }
    return json.dumps(header, sort_keys=True).encode("utf-8")


def model_hash(model):
    """sha256 over hyperparameters and parameter values, hex encoded."""
    h = hashlib.sha256()
    h.update(json.dumps(model.hyperparameters(), sort_keys=True)
             .encode("utf-8"))
    for (k, v) in model.params.items():
        h.update(k.encode("utf-8"))
        h.update(np.ascontiguousarray(v, dtype=_DTYPE).tobytes())
    return h.hexdigest()


def save_model(model, path, meta=None):
    """
    Write ``model`` to ``path``

    Parameters
    ----------
    model : ReprModel

    path : str

    meta : dict, optional
        JSON-serializable metadata such as the effective configuration and
        the loss curve summary.
    """
    blob = _payload(model, meta)
    _ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEADER.pack(FORMAT_VERSION, len(blob)))
        f.write(blob)
        for v in model.params.values():
            f.write(np.ascontiguousarray(v, dtype=_DTYPE).tobytes())


def load_model(path):
    """
    Read a checkpoint written by ``save_model``

    Returns
    -------
    model : ReprModel

    meta : dict
    """
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise ProvHuntError("cannot read {}: {}".format(path, e), "reprnet")

    def bad(msg):
        return SchemaError(msg, path=path, stage="reprnet")

    if data[:4] != MAGIC:
        raise bad("not a model checkpoint")
    if len(data) < 4 + _HEADER.size:
        raise bad("truncated checkpoint")
    version, n_blob = _HEADER.unpack_from(data, 4)
    if version != FORMAT_VERSION:
        raise bad("unsupported checkpoint version {}".format(version))
    pos = 4 + _HEADER.size
    try:
        header = json.loads(data[pos:pos + n_blob].decode("utf-8"))
        hyper = header["hyperparameters"]
        shapes = header["params"]
    except (ValueError, KeyError, TypeError) as e:
        raise bad("corrupt header ({})".format(e))
    pos += n_blob

    model = ReprModel(**hyper)
    expected = [[k, list(v.shape)] for (k, v) in model.params.items()]
    if shapes != expected:
        raise bad("parameter shapes do not match the hyperparameters")
    for (k, shape) in shapes:
        n = int(np.prod(shape)) * _DTYPE.itemsize
        if pos + n > len(data):
            raise bad("truncated parameter {}".format(k))
        arr = np.frombuffer(data, dtype=_DTYPE, count=n // _DTYPE.itemsize,
                            offset=pos)
        model.params[k] = arr.astype(np.float64).reshape(shape)
        pos += n
    if pos != len(data):
        raise bad("trailing bytes after the parameters")
    return model, header.get("meta", {})
