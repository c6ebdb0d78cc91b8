"""Flat binary parameter container.

Layout, in order:

    bytes 0..7    magic b"HYBREF01"
    bytes 8..15   header length H as little-endian uint64
    H bytes       UTF-8 JSON index: {"format_version": 1, "entries": [
                      {"name": str, "shape": [int, ...], "offset": int, "nbytes": int},
                      ...]}
    payload       concatenated row-major little-endian float64 blocks;
                  entry offsets are relative to the payload start

Entry order is preserved on round trip.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from hybridref.errors import DataError
from hybridref.tensor.core import Tensor

MAGIC = b"HYBREF01"
FORMAT_VERSION = 1


def save_params(path, params: Mapping[str, "np.ndarray | Tensor"]) -> None:
    entries = []
    blocks = []
    offset = 0
    for name, value in params.items():
        arr = value.data if isinstance(value, Tensor) else np.asarray(value)
        block = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(block)})
        blocks.append(block)
        offset += len(block)
    header = json.dumps({"format_version": FORMAT_VERSION, "entries": entries}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for block in blocks:
            fh.write(block)


def load_params(path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise DataError(f"{path}: not a hybridref checkpoint (bad magic)")
    header_len = int.from_bytes(raw[8:16], "little")
    try:
        header = json.loads(raw[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt checkpoint header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {header.get('format_version')}")
    payload = raw[16 + header_len:]
    out: dict[str, np.ndarray] = {}
    for entry in header["entries"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(payload):
            raise DataError(f"{path}: entry {entry['name']!r} overruns the payload")
        block = np.frombuffer(payload, dtype="<f8", count=nbytes // 8, offset=start)
        out[entry["name"]] = block.reshape(entry["shape"]).astype(np.float64, copy=True)
    return out
