"""Golden output files.

Format (little-endian, documented in docs/golden-format.md):
  bytes 0-3   magic b"NGLD"
  bytes 4-5   u16 version (1)
  bytes 6-7   u16 rank (1..4)
  bytes 8-15  u16 dims[4], unused trailing dims stored as 1
  bytes 16..  float32 payload, row-major

Only executable benchmarks produce goldens, so the u16 per-dim cap (65535)
is a non-issue; the writer rejects anything larger.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"NGLD"
VERSION = 1


class GoldenFormatError(ValueError):
    pass


def write_golden(path, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr, dtype="<f4")
    rank = arr.ndim
    if not (1 <= rank <= 4):
        raise GoldenFormatError(f"golden rank must be 1..4, got {rank}")
    dims = list(arr.shape) + [1] * (4 - rank)
    if max(dims) > 0xFFFF:
        raise GoldenFormatError(f"golden dim exceeds u16: {arr.shape}")
    header = MAGIC + struct.pack("<HH4H", VERSION, rank, *dims)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(header)
        f.write(arr.tobytes(order="C"))


def read_golden(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16 or header[:4] != MAGIC:
            raise GoldenFormatError(f"{path}: not a golden file")
        version, rank, *dims = struct.unpack("<HH4H", header[4:])
        if version != VERSION:
            raise GoldenFormatError(f"{path}: unsupported version {version}")
        if not (1 <= rank <= 4):
            raise GoldenFormatError(f"{path}: bad rank {rank}")
        shape = tuple(dims[:rank])
        count = int(np.prod(shape))
        payload = f.read(4 * count)
        if len(payload) != 4 * count:
            raise GoldenFormatError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
