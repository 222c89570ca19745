"""Named-tensor checkpoint container.

Layout: 8-byte magic, 8-byte little-endian header length, UTF-8 JSON
header (metadata plus a tensor directory of name/shape/dtype/offset),
then the raw little-endian tensor payloads. Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

MAGIC = b"ICDTNSR1"

_DTYPES = {"<f8": "<f8", "<f4": "<f4", "<i8": "<i8", "<i4": "<i4"}


def save_container(
    path: str | Path, meta: dict, tensors: dict[str, np.ndarray]
) -> None:
    directory = []
    offset = 0
    ordered = sorted(tensors.items())
    payloads = []
    for name, arr in ordered:
        arr = np.ascontiguousarray(arr)
        dtype = arr.dtype.newbyteorder("<").str
        if dtype not in _DTYPES:
            raise DataError(f"unsupported tensor dtype {arr.dtype} for {name!r}")
        raw = arr.astype(dtype, copy=False).tobytes()
        directory.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": dtype,
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        payloads.append(raw)
        offset += len(raw)
    header = json.dumps(
        {"meta": meta, "tensors": directory}, sort_keys=True, ensure_ascii=False
    ).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for raw in payloads:
            fh.write(raw)


def load_container(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    with path.open("rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise DataError(f"{path} is not a checkpoint container")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        payload = fh.read()
    tensors = {}
    for entry in header["tensors"]:
        start = entry["offset"]
        raw = payload[start : start + entry["nbytes"]]
        arr = np.frombuffer(raw, dtype=entry["dtype"]).reshape(entry["shape"])
        tensors[entry["name"]] = arr.copy()
    return header["meta"], tensors
