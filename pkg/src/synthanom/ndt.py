"""The NDT binary tensor file format.

Layout: magic ``NDTENSOR``, version byte 0x01, dtype byte 0x01 (32-bit
IEEE-754 little-endian float), ndim byte, ndim little-endian uint32
extents, then the row-major payload. Bit-exact and trivially parseable.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"NDTENSOR"
VERSION = 1
DTYPE_F32 = 1


class NdtError(ValueError):
    """Raised for malformed NDT files."""


def encode(x: np.ndarray) -> bytes:
    x = np.ascontiguousarray(x, dtype="<f4")
    if x.ndim < 1 or x.ndim > 255:
        raise NdtError(f"unsupported dimensionality {x.ndim}")
    header = MAGIC + struct.pack("<BBB", VERSION, DTYPE_F32, x.ndim)
    header += struct.pack(f"<{x.ndim}I", *x.shape)
    return header + x.tobytes()


def decode(blob: bytes) -> np.ndarray:
    if blob[: len(MAGIC)] != MAGIC:
        raise NdtError("bad magic, not an NDT file")
    if len(blob) < len(MAGIC) + 3:
        raise NdtError("truncated header")
    version, dtype, ndim = struct.unpack_from("<BBB", blob, len(MAGIC))
    if version != VERSION:
        raise NdtError(f"unsupported version {version}")
    if dtype != DTYPE_F32:
        raise NdtError(f"unsupported dtype code {dtype}")
    offset = len(MAGIC) + 3
    if len(blob) < offset + 4 * ndim:
        raise NdtError("truncated extents")
    shape = struct.unpack_from(f"<{ndim}I", blob, offset)
    offset += 4 * ndim
    count = int(np.prod(shape, dtype=np.int64))
    payload = blob[offset:]
    if len(payload) != 4 * count:
        raise NdtError(f"payload holds {len(payload) // 4} elements, header declares {count}")
    data = np.frombuffer(payload, dtype="<f4").reshape(shape)
    return data.copy()


def read(path: str | Path) -> np.ndarray:
    return decode(Path(path).read_bytes())


def write(path: str | Path, x: np.ndarray) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_bytes(encode(x))
    os.replace(tmp, path)
