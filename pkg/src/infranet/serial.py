"""Versioned binary tensor container for embeddings and value-net checkpoints.

Layout (all integers little-endian uint32):
  magic 'NVDT' | version | d | n_nodes | depth | n_arrays
  then per array: ndim | dims... | float32 payload, column-major.
A JSON sidecar (<path>.json) records the producing config.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"NVDT"
FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def write_tensors(path, arrays, d: int, n_nodes: int, depth: int, sidecar: dict = None):
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<5I", FORMAT_VERSION, d, n_nodes, depth, len(arrays)))
        for a in arrays:
            a = np.asarray(a, dtype=np.float32)
            f.write(struct.pack("<I", a.ndim))
            f.write(struct.pack(f"<{a.ndim}I", *a.shape))
            f.write(np.asfortranarray(a).tobytes(order="F"))
    if sidecar is not None:
        with open(str(path) + ".json", "w") as f:
            json.dump(sidecar, f, sort_keys=True, indent=2)
            f.write("\n")


def read_tensors(path):
    """Returns (arrays, header dict); loads the sidecar when present."""
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise FormatError(f"{path}: bad magic")
        version, d, n_nodes, depth, n_arrays = struct.unpack("<5I", f.read(20))
        if version != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        arrays = []
        for _ in range(n_arrays):
            (ndim,) = struct.unpack("<I", f.read(4))
            shape = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(f.read(4 * count), dtype="<f4")
            arrays.append(np.reshape(data, shape, order="F").astype(np.float64))
    header = {"version": version, "d": d, "n_nodes": n_nodes, "depth": depth}
    try:
        with open(str(path) + ".json") as f:
            header["sidecar"] = json.load(f)
    except FileNotFoundError:
        header["sidecar"] = None
    return arrays, header
