"""Checkpoint persistence: JSON manifest + one little-endian float32 blob.

File layout: 8-byte magic, uint32 manifest length, manifest JSON (UTF-8),
raw tensor bytes in manifest order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..corpus import Vocab
from .hyper import Hyperparams
from .model import Model

MAGIC = b"SSCREPR1"
VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(model: Model, path: Union[str, Path]) -> None:
    tensors = []
    offset = 0
    blobs = []
    for name, p in model.params.items():
        arr = np.ascontiguousarray(p, dtype="<f4")
        tensors.append({"name": name, "shape": list(p.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    manifest = json.dumps({
        "version": VERSION,
        "hyperparams": model.hp.to_json(),
        "vocab": model.vocab.to_json(),
        "norm_mode": model.norm_mode,
        "tensors": tensors,
        "blob_bytes": offset,
    }).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(manifest)))
        f.write(manifest)
        for b in blobs:
            f.write(b)


def load_checkpoint(path: Union[str, Path]) -> Model:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 4 or data[:len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file")
    (mlen,) = struct.unpack_from("<I", data, len(MAGIC))
    header_end = len(MAGIC) + 4 + mlen
    if len(data) < header_end:
        raise CheckpointError("truncated manifest")
    manifest = json.loads(data[len(MAGIC) + 4:header_end].decode("utf-8"))
    if manifest.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {manifest.get('version')}")
    blob = data[header_end:]
    if len(blob) != manifest["blob_bytes"]:
        raise CheckpointError(
            f"blob size mismatch: expected {manifest['blob_bytes']}, got {len(blob)}"
        )
    hp = Hyperparams.from_json(manifest["hyperparams"])
    vocab = Vocab.from_json(manifest["vocab"])
    model = Model(hp, vocab, norm_mode=manifest["norm_mode"])
    for spec in manifest["tensors"]:
        name, shape, off = spec["name"], tuple(spec["shape"]), spec["offset"]
        if name not in model.params:
            raise CheckpointError(f"unknown tensor {name!r}")
        if model.params[name].shape != shape:
            raise CheckpointError(
                f"shape mismatch for {name}: manifest {shape}, model {model.params[name].shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=off)
        model.params[name] = arr.reshape(shape).astype(np.float32)
    return model
