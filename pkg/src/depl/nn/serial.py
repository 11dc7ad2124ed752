"""Versioned binary format for trained parameters.

Layout: magic ``DEPW``, version u16, entry count u32, then a shape table
(name length u16 + utf-8 name, ndim u8, dims as u32), then the entries'
float64 data blocks in table order. All integers and floats little-endian.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FormatError

MAGIC = b"DEPW"
VERSION = 1


def save_params(path, named_arrays) -> None:
    """Write (name, array) pairs; arrays are stored as float64."""
    named_arrays = list(named_arrays)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HI", VERSION, len(named_arrays)))
        for name, arr in named_arrays:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        for _, arr in named_arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated while reading {what}", offset=fh.tell())
    return data


def load_params(path) -> dict[str, np.ndarray]:
    """Read a parameter file back into a name -> array dict."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
        version, count = struct.unpack("<HI", _read_exact(fh, 6, "header"))
        if version != VERSION:
            raise FormatError(f"unsupported version {version}", offset=4)
        table = []
        for i in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, f"entry {i} name length"))
            name = _read_exact(fh, name_len, f"entry {i} name").decode("utf-8")
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1, f"entry {i} ndim"))
            shape = struct.unpack(f"<{ndim}I",
                                  _read_exact(fh, 4 * ndim, f"entry {i} shape"))
            table.append((name, shape))
        out: dict[str, np.ndarray] = {}
        for name, shape in table:
            n_items = int(np.prod(shape)) if shape else 1
            raw = _read_exact(fh, 8 * n_items, f"data for {name!r}")
            out[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        extra = fh.read(1)
        if extra:
            raise FormatError("trailing bytes after final array",
                              offset=fh.tell() - 1)
        return out
