"""Binary model checkpoints.

All integers and floats are little-endian::

    offset  size  field
    0       8     magic b"ARNNCKPT"
    8       4     uint32 format version (1)
    12      4     uint32 type tag (1 = ARNN, 2 = MLP)
    16      8     uint64 payload length P
    24      P     payload
    24+P    4     uint32 CRC-32 (zlib) of bytes [0, 24+P)

ARNN payload: uint32 n, float64 total rate, n*n float64 ``excite_x``
row-major, n*n float64 ``excite_y`` row-major.

MLP payload: uint32 layer count k, (k+1) uint32 layer sizes, then for each
layer its (out, in) float64 weights row-major followed by ``out`` float64
biases.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .core import ArnnModel
from .errors import CheckpointError
from .mlp import MlpModel

MAGIC = b"ARNNCKPT"
VERSION = 1
TAG_ARNN = 1
TAG_MLP = 2
_HEAD = struct.Struct("<8sIIQ")
_CRC = struct.Struct("<I")


def _f64(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def encode(model) -> bytes:
    if isinstance(model, ArnnModel):
        tag = TAG_ARNN
        payload = struct.pack("<Id", model.n, model.total_rate) + _f64(model.excite_x) + _f64(model.excite_y)
    elif isinstance(model, MlpModel):
        tag = TAG_MLP
        sizes = model.sizes
        payload = struct.pack(f"<I{len(sizes)}I", len(model.weights), *sizes)
        for W, b in zip(model.weights, model.biases):
            payload += _f64(W) + _f64(b)
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")
    body = _HEAD.pack(MAGIC, VERSION, tag, len(payload)) + payload
    return body + _CRC.pack(zlib.crc32(body))


def decode(blob: bytes):
    if len(blob) < _HEAD.size + _CRC.size:
        raise CheckpointError("checkpoint truncated")
    magic, version, tag, plen = _HEAD.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError("not a model checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    end = _HEAD.size + plen
    if len(blob) != end + _CRC.size:
        raise CheckpointError("checkpoint length does not match header")
    (crc,) = _CRC.unpack_from(blob, end)
    if crc != zlib.crc32(blob[:end]):
        raise CheckpointError("checksum mismatch")
    payload = memoryview(blob)[_HEAD.size:end]
    try:
        if tag == TAG_ARNN:
            n, W = struct.unpack_from("<Id", payload)
            mats = np.frombuffer(payload, dtype="<f8", offset=12).astype(float)
            if mats.size != 2 * n * n:
                raise CheckpointError("ARNN payload size mismatch")
            return ArnnModel(W, mats[: n * n].reshape(n, n), mats[n * n:].reshape(n, n))
        if tag == TAG_MLP:
            (k,) = struct.unpack_from("<I", payload)
            sizes = struct.unpack_from(f"<{k + 1}I", payload, 4)
            flat = np.frombuffer(payload, dtype="<f8", offset=4 * (k + 2)).astype(float)
            Ws, bs, pos = [], [], 0
            for a, b in zip(sizes[:-1], sizes[1:]):
                Ws.append(flat[pos: pos + a * b].reshape(b, a))
                pos += a * b
                bs.append(flat[pos: pos + b])
                pos += b
            if pos != flat.size:
                raise CheckpointError("MLP payload size mismatch")
            return MlpModel(tuple(Ws), tuple(bs))
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"corrupt payload: {exc}") from None
    raise CheckpointError(f"unknown type tag {tag}")


def save(model, path):
    Path(path).write_bytes(encode(model))


def load(path):
    return decode(Path(path).read_bytes())
