"""Binary NLSF snapshots: one complex field per file, little-endian.

Layout::

    b"NLSF"  u32 version=1  u8 d  u32 m  f64 half_len  f64 timestamp
    m**d complex values as interleaved f64 (re, im), last axis fastest
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import GridSpec, SpectralField, make_grid

MAGIC = b"NLSF"
VERSION = 1
_HEADER = struct.Struct("<4sIBIdd")


class SnapshotError(ValueError):
    pass


def dumps(f: SpectralField, timestamp: float = 0.0) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, VERSION, g.d, g.m, g.half_len, float(timestamp))
    body = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return head + body


def loads(buf: bytes) -> tuple[SpectralField, float]:
    if len(buf) < _HEADER.size:
        raise SnapshotError("truncated header")
    magic, version, d, m, half_len, ts = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported version {version}")
    grid = make_grid(d, m, half_len)
    n = grid.size * 16
    body = buf[_HEADER.size :]
    if len(body) != n:
        raise SnapshotError(f"expected {n} payload bytes, got {len(body)}")
    vals = np.frombuffer(body, dtype="<c16").reshape(grid.shape)
    return SpectralField(grid, vals), ts


def write(path, f: SpectralField, timestamp: float = 0.0) -> Path:
    path = Path(path)
    path.write_bytes(dumps(f, timestamp))
    return path


def read(path) -> tuple[SpectralField, float]:
    return loads(Path(path).read_bytes())


def header_grid(path) -> GridSpec:
    with open(path, "rb") as fh:
        _, _, d, m, half_len, _ = _HEADER.unpack(fh.read(_HEADER.size))
    return make_grid(d, m, half_len)
