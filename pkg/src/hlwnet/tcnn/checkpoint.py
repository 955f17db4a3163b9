"""Model checkpoints.

Layout: ``b"HLWTC\\0"``, uint16 version, uint32 header length, JSON header,
32-byte sha256 of the header, then every tensor as little-endian float64 in
the order listed by the header.
"""

import hashlib
import json
import struct

import numpy as np

from ..dataset import NormalizationSpec
from .model import BUFFER_NAMES, PARAM_NAMES, Tcnn, TcnnShape

MAGIC = b"HLWTC\0"
VERSION = 1
_PREFIX = struct.Struct("<6sHI")


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model, spec, kinds, seed=None, epoch=0, extra=None):
    names = PARAM_NAMES + BUFFER_NAMES
    tensors = {**model.params, **model.buffers}
    body = b"".join(np.ascontiguousarray(tensors[n], dtype="<f8").tobytes() for n in names)
    header = {
        "version": VERSION,
        "shape": model.shape.to_dict(),
        "normalization": spec.to_dict(),
        "normalization_digest": spec.digest(),
        "kinds": list(kinds),
        "seed": seed,
        "epoch": epoch,
        "tensors": [[n, list(tensors[n].shape)] for n in names],
        "payload_sha256": hashlib.sha256(body).hexdigest(),
        "extra": extra or {},
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(_PREFIX.pack(MAGIC, VERSION, len(hbytes)))
        f.write(hbytes)
        f.write(hashlib.sha256(hbytes).digest())
        f.write(body)


class Checkpoint:
    def __init__(self, model, spec, kinds, seed, epoch, extra):
        self.model, self.spec, self.kinds = model, spec, tuple(kinds)
        self.seed, self.epoch, self.extra = seed, epoch, extra


def load_checkpoint(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _PREFIX.size:
        raise CheckpointError("truncated checkpoint")
    magic, version, hlen = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off = _PREFIX.size
    hbytes, digest = raw[off:off + hlen], raw[off + hlen:off + hlen + 32]
    if len(digest) < 32:
        raise CheckpointError("truncated checkpoint header")
    if hashlib.sha256(hbytes).digest() != digest:
        raise CheckpointError("checkpoint header digest mismatch")
    header = json.loads(hbytes)
    body = raw[off + hlen + 32:]
    if hashlib.sha256(body).hexdigest() != header["payload_sha256"]:
        raise CheckpointError("checkpoint payload corrupt or truncated")
    spec = NormalizationSpec.from_dict(header["normalization"])
    if spec.digest() != header["normalization_digest"]:
        raise CheckpointError("normalisation digest mismatch")
    shape = TcnnShape(**header["shape"])
    tensors, pos = {}, 0
    for name, dims in header["tensors"]:
        n = int(np.prod(dims)) if dims else 1
        tensors[name] = np.frombuffer(body, "<f8", n, pos).reshape(dims).astype(float)
        pos += 8 * n
    model = Tcnn(shape, {k: tensors[k] for k in PARAM_NAMES}, {k: tensors[k] for k in BUFFER_NAMES})
    return Checkpoint(model, spec, header["kinds"], header["seed"], header["epoch"], header["extra"])
