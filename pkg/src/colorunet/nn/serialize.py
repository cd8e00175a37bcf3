"""Named-tensor checkpoint container.

Layout (all little-endian)::

    "CUNW"            4 bytes magic
    version           u32
    echo_len          u32, followed by echo_len u32 config values
    tensor_count      u32
    per tensor:
        name_len      u32
        name          utf-8 bytes
        rank          u32
        dims          rank x u32
        values        prod(dims) x f64
    crc32             u32 over every preceding byte

Values are stored as float64 whatever the in-memory dtype, so float32
parameters round-trip bit-exactly.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import FormatError

MAGIC = b"CUNW"
VERSION = 1


def to_bytes(tensors: dict[str, np.ndarray], echo=()) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(echo))]
    parts.append(struct.pack(f"<{len(echo)}I", *echo))
    parts.append(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr)
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def from_bytes(buf: bytes) -> tuple[dict[str, np.ndarray], tuple[int, ...]]:
    """Inverse of :func:`to_bytes`. Returns (tensors, config echo)."""
    if buf[:4] != MAGIC:
        raise FormatError("not a checkpoint file (bad magic)")
    if len(buf) < 16:
        raise FormatError("truncated checkpoint")
    (crc,) = struct.unpack_from("<I", buf, len(buf) - 4)
    body = buf[:-4]
    if zlib.crc32(body) != crc:
        raise FormatError("checkpoint checksum mismatch (truncated or corrupt file)")
    try:
        version, echo_len = struct.unpack_from("<II", body, 4)
        if version != VERSION:
            raise FormatError(f"unsupported checkpoint version {version} (expected {VERSION})")
        pos = 12
        echo = struct.unpack_from(f"<{echo_len}I", body, pos)
        pos += 4 * echo_len
        (count,) = struct.unpack_from("<I", body, pos)
        pos += 4
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<I", body, pos)
            pos += 4
            name = body[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<I", body, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}I", body, pos)
            pos += 4 * rank
            size = int(np.prod(dims, dtype=np.int64))
            if pos + 8 * size > len(body):
                raise FormatError(f"checkpoint tensor {name!r} runs past end of file")
            tensors[name] = np.frombuffer(body, dtype="<f8", count=size, offset=pos).reshape(dims).copy()
            pos += 8 * size
    except struct.error as exc:
        raise FormatError(f"malformed checkpoint: {exc}") from None
    if pos != len(body):
        raise FormatError("trailing bytes after checkpoint tensors")
    return tensors, tuple(echo)


def save(path, tensors: dict[str, np.ndarray], echo=()) -> None:
    Path(path).write_bytes(to_bytes(tensors, echo))


def load(path) -> tuple[dict[str, np.ndarray], tuple[int, ...]]:
    return from_bytes(Path(path).read_bytes())
