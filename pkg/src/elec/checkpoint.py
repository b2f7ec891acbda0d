"""Checkpoint container: named parameter records in a small binary format.

Layout (all integers little-endian):

    magic   4 bytes  b"ELCK"
    version u32      1
    tag     u16 length + UTF-8 bytes   (e.g. "gain", "vanilla", "adapter")
    meta    u32 length + UTF-8 bytes   ("key=value" lines, sorted by key)
    count   u32      number of parameter records
    record: name u16 length + UTF-8, ndim u8, dims u32 each,
            values as 32-bit IEEE-754 little-endian floats (C order)

Values are widened to float64 on load.
"""

from __future__ import annotations

import struct
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError, StoreCorruptError, StoreFormatError
from .nn import Parameter

CHECKPOINT_MAGIC = b"ELCK"
CHECKPOINT_VERSION = 1


def _pack_str(text: str, width: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack(f"<{width}", len(raw)) + raw


def save_checkpoint(path, tag: str, params: Sequence[Parameter],
                    meta: Mapping[str, str] | None = None) -> None:
    meta_text = "\n".join(f"{k}={v}" for k, v in sorted((meta or {}).items()))
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(_pack_str(tag, "H"))
        fh.write(_pack_str(meta_text, "I"))
        fh.write(struct.pack("<I", len(params)))
        for p in params:
            fh.write(_pack_str(p.name, "H"))
            dims = p.values.shape
            fh.write(struct.pack("<B", len(dims)))
            fh.write(struct.pack(f"<{len(dims)}I", *dims))
            fh.write(np.ascontiguousarray(p.values, dtype="<f4").tobytes(order="C"))


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise StoreCorruptError(f"{self.path}: truncated checkpoint")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u(self, fmt: str) -> int:
        size = struct.calcsize(f"<{fmt}")
        return struct.unpack(f"<{fmt}", self.take(size))[0]

    def text(self, width: str) -> str:
        return self.take(self.u(width)).decode("utf-8")


def load_checkpoint(path) -> tuple[str, dict[str, str], dict[str, np.ndarray]]:
    """Returns (tag, meta dict, {name: float64 array})."""
    with open(path, "rb") as fh:
        blob = fh.read()
    r = _Reader(blob, path)
    if r.take(4) != CHECKPOINT_MAGIC:
        raise StoreFormatError(f"{path}: bad checkpoint magic")
    version = r.u("I")
    if version != CHECKPOINT_VERSION:
        raise StoreFormatError(f"{path}: unsupported checkpoint version {version}")
    tag = r.text("H")
    meta_text = r.text("I")
    meta = {}
    for line in meta_text.splitlines():
        key, _, value = line.partition("=")
        meta[key] = value
    count = r.u("I")
    records: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.text("H")
        ndim = r.u("B")
        dims = tuple(r.u("I") for _ in range(ndim))
        n_values = int(np.prod(dims)) if dims else 1
        raw = r.take(n_values * 4)
        records[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float64)
    if r.pos != len(blob):
        raise StoreCorruptError(f"{path}: {len(blob) - r.pos} trailing bytes")
    return tag, meta, records


def load_into(params: Sequence[Parameter], records: Mapping[str, np.ndarray]) -> None:
    """Assign checkpoint records onto live parameters by name."""
    for p in params:
        if p.name not in records:
            raise StoreCorruptError(f"checkpoint missing parameter {p.name!r}")
        rec = records[p.name]
        if rec.shape != p.values.shape:
            raise DimensionError(
                f"checkpoint {p.name!r}: shape {rec.shape} != model {p.values.shape}")
        p.values[...] = rec
