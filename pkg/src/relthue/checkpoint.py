"""Checkpoint streams: named sections of integer vectors.

Layout (all integers little-endian)::

    magic      8 bytes   b"RTCKPT01"
    repeated sections:
      name_len u32, name (utf-8)
      count    u64       number of vectors
      dim      u32       entries per vector
      data     count * dim * i64

Vectors wider than 64 bits are not supported; exponent vectors and
coordinates of reported elements are far below that.  Element coordinates
that do not fit are stored in a JSON section via ``write_json``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CheckpointError

MAGIC = b"RTCKPT01"
_JSON_PREFIX = "json:"


class CheckpointWriter:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = open(self.path, "wb")
        self._fh.write(MAGIC)

    def write(self, name: str, vectors: Iterable[Sequence[int]], dim: int | None = None):
        try:
            arr = np.array([list(v) for v in vectors], dtype=np.int64)
        except (ValueError, OverflowError) as exc:
            raise CheckpointError(f"section {name}: vectors must share one length and fit in 64 bits") from exc
        if arr.size == 0:
            arr = arr.reshape(0, dim or 0)
        if arr.ndim != 2:
            raise CheckpointError(f"section {name}: vectors must share one length")
        nm = name.encode()
        self._fh.write(struct.pack("<I", len(nm)))
        self._fh.write(nm)
        self._fh.write(struct.pack("<QI", arr.shape[0], arr.shape[1]))
        self._fh.write(arr.astype("<i8").tobytes())
        self._fh.flush()

    def write_json(self, name: str, obj) -> None:
        """Arbitrary JSON payload stored as a byte vector section."""
        data = json.dumps(obj, sort_keys=True).encode()
        self.write(_JSON_PREFIX + name, [[b] for b in data], dim=1)

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_checkpoint(path: str | Path) -> dict[str, object]:
    """All sections of a stream.  Integer sections map to lists of tuples,
    JSON sections to their decoded payload.  Later sections with the same
    name replace earlier ones."""
    p = Path(path)
    if not p.exists():
        raise CheckpointError(f"checkpoint {p} does not exist")
    raw = p.read_bytes()
    if raw[:8] != MAGIC:
        raise CheckpointError(f"{p} is not a checkpoint stream")
    pos = 8
    out: dict[str, object] = {}
    try:
        while pos < len(raw):
            (nl,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            name = raw[pos : pos + nl].decode()
            pos += nl
            count, dim = struct.unpack_from("<QI", raw, pos)
            pos += 12
            nbytes = 8 * count * dim
            arr = np.frombuffer(raw[pos : pos + nbytes], dtype="<i8").reshape(count, dim)
            if arr.size != count * dim:
                raise CheckpointError("truncated section")
            pos += nbytes
            if name.startswith(_JSON_PREFIX):
                out[name[len(_JSON_PREFIX) :]] = json.loads(bytes(int(b) for b in arr[:, 0]).decode())
            else:
                out[name] = [tuple(int(x) for x in row) for row in arr]
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint {p}: {exc}") from exc
    return out
