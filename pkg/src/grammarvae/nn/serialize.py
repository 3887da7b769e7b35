"""Versioned binary container for named float64 tensors.

Layout: 8-byte magic, 4-byte little-endian header length, JSON header, raw
tensor bytes in header order. The header holds a format version, caller
metadata, and per-tensor name/shape/offset entries. A sibling
``<path>.manifest.json`` mirrors names and shapes for inspection without
reading the binary.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

MAGIC = b"GVAETNSR"
FORMAT_VERSION = 1


class SerializationError(RuntimeError):
    pass


def save_tensors(path: str, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    entries = []
    offset = 0
    blobs = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        raw = arr.tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset,
                        "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = {
        "version": FORMAT_VERSION,
        "meta": meta or {},
        "tensors": entries,
    }
    header_bytes = json.dumps(header).encode("utf-8")
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for raw in blobs:
            fh.write(raw)
    os.replace(tmp, path)
    manifest = {
        "version": FORMAT_VERSION,
        "tensors": [{"name": e["name"], "shape": e["shape"]} for e in entries],
    }
    with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load_tensors(path: str) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4 or blob[: len(MAGIC)] != MAGIC:
        raise SerializationError(f"{path}: not a tensor container")
    (header_len,) = struct.unpack("<I", blob[len(MAGIC):len(MAGIC) + 4])
    body_start = len(MAGIC) + 4 + header_len
    if len(blob) < body_start:
        raise SerializationError(f"{path}: truncated header")
    try:
        header = json.loads(blob[len(MAGIC) + 4:body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SerializationError(f"{path}: corrupt header: {e}") from e
    if header.get("version") != FORMAT_VERSION:
        raise SerializationError(
            f"{path}: format version {header.get('version')} unsupported "
            f"(expected {FORMAT_VERSION})"
        )
    out: dict[str, np.ndarray] = {}
    for e in header["tensors"]:
        start = body_start + e["offset"]
        end = start + e["nbytes"]
        if end > len(blob):
            raise SerializationError(f"{path}: truncated tensor {e['name']!r}")
        arr = np.frombuffer(blob[start:end], dtype=np.float64).reshape(e["shape"])
        expected = int(np.prod(e["shape"])) * 8
        if e["nbytes"] != expected:
            raise SerializationError(
                f"{path}: tensor {e['name']!r} shape {e['shape']} does not "
                f"match payload of {e['nbytes']} bytes"
            )
        out[e["name"]] = arr.copy()
    return out, header.get("meta", {})
