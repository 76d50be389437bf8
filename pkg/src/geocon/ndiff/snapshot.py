"""Parameter snapshot format: JSON manifest + raw little-endian float64 payload.

Layout: 8-byte little-endian manifest length, UTF-8 JSON manifest listing
tensor names and shapes in payload order, then the concatenated float64
buffers. Names are stored sorted so snapshots are byte-stable.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import Tensor

_MAGIC = struct.Struct("<Q")


def save_params(path: str | Path, params: dict[str, "Tensor | np.ndarray"]) -> None:
    names = sorted(params)
    arrays = []
    manifest = []
    for name in names:
        t = params[name]
        arr = np.ascontiguousarray(t.data if isinstance(t, Tensor) else t, dtype="<f8")
        arrays.append(arr)
        manifest.append({"name": name, "shape": list(arr.shape)})
    blob = json.dumps({"tensors": manifest}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC.pack(len(blob)))
        fh.write(blob)
        for arr in arrays:
            fh.write(arr.tobytes())


def load_params(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        (mlen,) = _MAGIC.unpack(fh.read(_MAGIC.size))
        manifest = json.loads(fh.read(mlen).decode("utf-8"))
        out: dict[str, np.ndarray] = {}
        for entry in manifest["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"truncated payload for tensor {entry['name']!r}")
            out[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return out
