"""
Binary checkpoint of a packed graph.

Layout, all integers little-endian::

    magic      4s   b"PPG1"
    header     <HHqIIIQQII   format version, flags (bit 0 = versioning),
                             origin day (-1 when empty), entities, subjects,
                             objects, edges, suppressed events, sparse queue
                             cap, last relative day
    arrays     repeated <cQ typecode + item count, then the raw items:
               subject headers (Q), object headers (Q), subject queue
               lengths (Q), sparse subject words (Q), extended subject words
               (Q), extended subject version words (I), object queue lengths
               (Q), sparse object words (I), extended object words (Q),
               subject -> entity (I), object -> entity (I), entity -> subject
               (q), entity -> object (q), entity kinds (B), abstract types (B)
    side table <Q length then UTF-8 JSON: original ids, names, version
               index, abstraction rules version and caller metadata
"""
import array
import json
import os
import struct
import sys

from ..util import SchemaError, ProvHuntError, _ensure_dir
from .core import Ppg, Role, _ExtendedQueue, _is_exp


MAGIC = b"PPG1"
FORMAT_VERSION = 2
_HEADER = struct.Struct("<HHqIIIQQII")
_ARRAY = struct.Struct("<cQ")
_LEN = struct.Struct("<Q")


def _write_array(f, arr):
    f.write(_ARRAY.pack(arr.typecode.encode("ascii"), len(arr)))
    if sys.byteorder == "big":
        arr = array.array(arr.typecode, arr)
        arr.byteswap()
    f.write(arr.tobytes())


def _read_exact(f, n, path):
    data = f.read(n)
    if len(data) != n:
        raise SchemaError("truncated checkpoint", path=path, stage="ppg")
    return data


def _read_array(f, typecode, path):
    code, count = _ARRAY.unpack(_read_exact(f, _ARRAY.size, path))
    if code.decode("ascii") != typecode:
        msg = "expected array of type {!r}, found {!r}"
        raise SchemaError(msg.format(typecode, code), path=path, stage="ppg")
    arr = array.array(typecode)
    arr.frombytes(_read_exact(f, count * arr.itemsize, path))
    if sys.byteorder == "big":
        arr.byteswap()
    return arr


def save_ppg(g, path, meta=None):
    """
    Write ``g`` (a live graph or a snapshot) to ``path``

    Parameters
    ----------
    g : Ppg or PpgSnapshot

    path : str

    meta : dict, optional
        JSON-serializable metadata stored with the side table, such as the
        effective configuration.
    """
    sbj_len = array.array("Q")
    sbj_sparse = array.array("Q")
    sbj_ext = array.array("Q")
    sbj_aux = array.array("I")
    for s in range(g.n_subjects):
        q = g._sbj_q[s]
        n = g._qlen(Role.SUBJECT, s)
        sbj_len.append(n)
        if _is_exp(g._sbj_hdr[s]):
            sbj_ext.extend(q.words[:n])
            sbj_aux.extend(q.aux[:n])
        else:
            sbj_sparse.extend(q[:n])

    obj_len = array.array("Q")
    obj_sparse = array.array("I")
    obj_ext = array.array("Q")
    for o in range(g.n_objects):
        q = g._obj_q[o]
        n = g._qlen(Role.OBJECT, o)
        obj_len.append(n)
        if _is_exp(g._obj_hdr[o]):
            obj_ext.extend(q.words[:n])
        else:
            obj_sparse.extend(q[:n])

    side = {
        "ids": g._ids,
        "names": g._names,
        "rules_version": getattr(g.rules, "version", None),
        "last_version": [list(k) + [v] for (k, v) in
                         getattr(g, "_last_version", {}).items()],
        "meta": meta or {},
    }
    blob = json.dumps(side).encode("utf-8")

    flags = 1 if g.versioning else 0
    origin = -1 if g.origin_day is None else g.origin_day
    _ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEADER.pack(FORMAT_VERSION, flags, origin, g.n_nodes,
                             g.n_subjects, g.n_objects, g.edge_count,
                             g.suppressed, g.sparse_queue_cap, g.max_day))
        for arr in [g._sbj_hdr, g._obj_hdr, sbj_len, sbj_sparse, sbj_ext,
                    sbj_aux, obj_len, obj_sparse, obj_ext]:
            _write_array(f, arr)
        for arr in [g._sbj_ent, g._obj_ent, g._ent_sbj, g._ent_obj,
                    g._kinds, g._abs]:
            _write_array(f, arr)
        f.write(_LEN.pack(len(blob)))
        f.write(blob)


def load_ppg(path, rules=None):
    """
    Read a checkpoint back into a live ``Ppg``

    Returns
    -------
    g : Ppg
        Further events may be appended to it.

    meta : dict
        The metadata stored by ``save_ppg``.
    """
    try:
        f = open(path, "rb")
    except OSError as e:
        raise ProvHuntError("cannot read {}: {}".format(path, e), "ppg")

    with f:
        if _read_exact(f, 4, path) != MAGIC:
            raise SchemaError("not a graph checkpoint", path=path, stage="ppg")
        (version, flags, origin, n_ent, n_sbj, n_obj, n_edges, suppressed,
         cap, max_day) = _HEADER.unpack(_read_exact(f, _HEADER.size, path))
        if version != FORMAT_VERSION:
            msg = "unsupported checkpoint version {}".format(version)
            raise SchemaError(msg, path=path, stage="ppg")

        sbj_hdr = _read_array(f, "Q", path)
        obj_hdr = _read_array(f, "Q", path)
        sbj_len = _read_array(f, "Q", path)
        sbj_sparse = _read_array(f, "Q", path)
        sbj_ext = _read_array(f, "Q", path)
        sbj_aux = _read_array(f, "I", path)
        obj_len = _read_array(f, "Q", path)
        obj_sparse = _read_array(f, "I", path)
        obj_ext = _read_array(f, "Q", path)
        sbj_ent = _read_array(f, "I", path)
        obj_ent = _read_array(f, "I", path)
        ent_sbj = _read_array(f, "q", path)
        ent_obj = _read_array(f, "q", path)
        kinds = _read_array(f, "B", path)
        abs_codes = _read_array(f, "B", path)
        (n_blob,) = _LEN.unpack(_read_exact(f, _LEN.size, path))
        try:
            side = json.loads(_read_exact(f, n_blob, path).decode("utf-8"))
        except ValueError as e:
            raise SchemaError("corrupt side table ({})".format(e), path=path,
                              stage="ppg")

    counts = [len(sbj_hdr), len(obj_hdr), len(ent_sbj), len(side["ids"])]
    if counts != [n_sbj, n_obj, n_ent, n_ent]:
        raise SchemaError("inconsistent table sizes", path=path, stage="ppg")

    g = Ppg(rules=rules, versioning=bool(flags & 1), sparse_queue_cap=cap)
    g.origin_day = None if origin < 0 else origin
    g.max_day = max_day
    g.edge_count = n_edges
    g.suppressed = suppressed
    g._sbj_hdr = sbj_hdr
    g._obj_hdr = obj_hdr

    pos_sparse = pos_ext = 0
    for s in range(n_sbj):
        n = sbj_len[s]
        if _is_exp(sbj_hdr[s]):
            q = _ExtendedQueue(with_aux=True)
            q.words = array.array("Q", sbj_ext[pos_ext:pos_ext + n])
            q.aux = array.array("I", sbj_aux[pos_ext:pos_ext + n])
            pos_ext += n
        else:
            q = array.array("Q", sbj_sparse[pos_sparse:pos_sparse + n])
            pos_sparse += n
        g._sbj_q.append(q)

    pos_sparse = pos_ext = 0
    for o in range(n_obj):
        n = obj_len[o]
        if _is_exp(obj_hdr[o]):
            q = _ExtendedQueue(with_aux=False)
            q.words = array.array("Q", obj_ext[pos_ext:pos_ext + n])
            pos_ext += n
        else:
            q = array.array("I", obj_sparse[pos_sparse:pos_sparse + n])
            pos_sparse += n
        g._obj_q.append(q)

    g._sbj_ent = sbj_ent
    g._obj_ent = obj_ent
    g._ent_sbj = ent_sbj
    g._ent_obj = ent_obj
    g._kinds = kinds
    g._abs = abs_codes
    g._ids = list(side["ids"])
    g._names = list(side["names"])
    g._index = {ident: i for (i, ident) in enumerate(g._ids)}
    g._last_version = {tuple(item[:4]): item[4]
                       for item in side.get("last_version", [])}
    return g, side.get("meta", {})
