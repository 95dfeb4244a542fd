"""
Fixed-width bit layouts of node headers and edge records.

Fields are packed from the least significant bit upwards in the order they
are declared. Signed fields use two's complement.
"""

DAY_MS = 86400000
MAX_DAYS = 32
SPARSE_CAP = 16
SPARSE_VERSION_MAX = (1 << 8) - 1
EXTENDED_VERSION_MAX = (1 << 16) - 1
MAX_NODES = 1 << 32


class BitLayout(object):
    """
    A named sequence of ``(field, bits, signed)`` packed into one integer

    Parameters
    ----------
    name : str

    fields : list of (str, int, bool)

    width : int
        Storage width in bits; the fields must fit in it.
    """
    __slots__ = ["name", "fields", "width", "_shifts", "_masks", "_ranges",
                 "_signed", "_index"]

    def __init__(self, name, fields, width):
        self.name = name
        self.fields = [f[0] for f in fields]
        self.width = width
        self._shifts = []
        self._masks = []
        self._ranges = []
        self._signed = []
        shift = 0
        for (_, bits, signed) in fields:
            self._shifts.append(shift)
            self._masks.append((1 << bits) - 1)
            self._signed.append(signed)
            if signed:
                self._ranges.append((-(1 << (bits - 1)), (1 << (bits - 1)) - 1))
            else:
                self._ranges.append((0, (1 << bits) - 1))
            shift += bits
        if shift > width:
            msg = "layout {} needs {} bits but only {} are available"
            raise ValueError(msg.format(name, shift, width))
        self._index = {f: i for (i, f) in enumerate(self.fields)}

    def range(self, field):
        return self._ranges[self._index[field]]

    def fits(self, field, value):
        lo, hi = self._ranges[self._index[field]]
        return lo <= value <= hi

    def pack(self, *values):
        if len(values) != len(self.fields):
            msg = "{} packs {} fields, got {}"
            raise ValueError(msg.format(self.name, len(self.fields),
                                        len(values)))
        word = 0
        for (i, v) in enumerate(values):
            lo, hi = self._ranges[i]
            if v < lo or v > hi:
                msg = "{}.{}={} outside [{}, {}]"
                raise ValueError(msg.format(self.name, self.fields[i], v,
                                            lo, hi))
            word |= (v & self._masks[i]) << self._shifts[i]
        return word

    def unpack(self, word):
        out = []
        for i in range(len(self._shifts)):
            mask = self._masks[i]
            v = (word >> self._shifts[i]) & mask
            if self._signed[i] and v > (mask >> 1):
                v -= mask + 1
            out.append(v)
        return tuple(out)

    def get(self, word, field):
        i = self._index[field]
        mask = self._masks[i]
        v = (word >> self._shifts[i]) & mask
        if self._signed[i] and v > (mask >> 1):
            v -= mask + 1
        return v

    def replace(self, word, field, value):
        i = self._index[field]
        lo, hi = self._ranges[i]
        if value < lo or value > hi:
            msg = "{}.{}={} outside [{}, {}]"
            raise ValueError(msg.format(self.name, field, value, lo, hi))
        mask = self._masks[i] << self._shifts[i]
        return (word & ~mask) | ((value & self._masks[i]) << self._shifts[i])

    def __repr__(self):
        return "BitLayout({}, {})".format(self.name, self.fields)


# [index:32 | abs:4 | exp:1 | version:16 | date0:5 | rsv:6]
NODE_HEADER = BitLayout("node_header", [
    ("index", 32, False), ("abs", 4, False), ("exp", 1, False),
    ("version", 16, False), ("date0", 5, False),
], 64)

# [delta:11 | type:4 | dir:1 | ts:27 | date:5 | ver:8 | rsv:8]
SPARSE_SUBJECT = BitLayout("sparse_subject", [
    ("delta", 11, True), ("type", 4, False), ("dir", 1, False),
    ("ts", 27, False), ("date", 5, False), ("ver", 8, False),
], 64)

# [delta:16 | type:4 | dir:1 | rsv:11]
SPARSE_OBJECT = BitLayout("sparse_object", [
    ("delta", 16, True), ("type", 4, False), ("dir", 1, False),
], 32)

# 64-bit word [delta:27 | type:4 | dir:1 | ts:27 | date:5] followed by a
# 32-bit word [ver:16 | rsv:16]
EXTENDED_SUBJECT = BitLayout("extended_subject", [
    ("delta", 27, True), ("type", 4, False), ("dir", 1, False),
    ("ts", 27, False), ("date", 5, False),
], 64)
EXTENDED_SUBJECT_AUX = BitLayout("extended_subject_aux", [
    ("ver", 16, False),
], 32)

# [delta:32 | type:4 | dir:1 | rsv:27]
EXTENDED_OBJECT = BitLayout("extended_object", [
    ("delta", 32, True), ("type", 4, False), ("dir", 1, False),
], 64)

# bytes per stored edge, by class
EDGE_BYTES = {
    "sparse_subject": 8,
    "sparse_object": 4,
    "extended_subject": 12,
    "extended_object": 8,
}

# header word plus queue handle
NODE_BYTES = 16


def pack_subject_edge(extended, delta, code, dirbit, ts_ms, ver):
    """
    Encode a subject-side record

    Returns
    -------
    word : int
        The 64-bit word.

    aux : int or None
        The 32-bit version word of the extended form.
    """
    date, ms = divmod(ts_ms, DAY_MS)
    if extended:
        word = EXTENDED_SUBJECT.pack(delta, code, dirbit, ms, date)
        return word, EXTENDED_SUBJECT_AUX.pack(min(ver, EXTENDED_VERSION_MAX))
    word = SPARSE_SUBJECT.pack(delta, code, dirbit, ms, date,
                               min(ver, SPARSE_VERSION_MAX))
    return word, None


def unpack_subject_edge(extended, word, aux=None):
    """Inverse of ``pack_subject_edge``: (delta, code, dir, ts_ms, ver)."""
    if extended:
        delta, code, dirbit, ms, date = EXTENDED_SUBJECT.unpack(word)
        ver = EXTENDED_SUBJECT_AUX.unpack(aux)[0]
    else:
        delta, code, dirbit, ms, date, ver = SPARSE_SUBJECT.unpack(word)
    return delta, code, dirbit, date * DAY_MS + ms, ver


def pack_object_edge(extended, delta, code, dirbit):
    layout = EXTENDED_OBJECT if extended else SPARSE_OBJECT
    return layout.pack(delta, code, dirbit)


def unpack_object_edge(extended, word):
    layout = EXTENDED_OBJECT if extended else SPARSE_OBJECT
    return layout.unpack(word)
