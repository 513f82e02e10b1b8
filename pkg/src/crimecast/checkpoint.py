"""Binary parameter checkpoints.

Layout, all little-endian::

    8 bytes   magic  b"CRCASTNN"
    u32       format version (1)
    u32 x 3   input_size, lstm_size, gru_size
    f64       dropout_rate
    u8        has_seed, then i64 seed (0 when absent)
    f64 ...   every parameter array in NetworkParams.named_arrays() order, row-major
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .exceptions import CrimecastError
from .nn import NetworkSpec, zero_params, NetworkParams

MAGIC = b"CRCASTNN"
VERSION = 1
_HEADER = struct.Struct("<8sI3IdBq")


class CheckpointError(CrimecastError, ValueError):
    pass


def dumps(params: NetworkParams) -> bytes:
    i, h1, h2 = params.sizes
    seed = params.seed
    header = _HEADER.pack(MAGIC, VERSION, i, h1, h2, float(params.dropout_rate),
                          seed is not None, 0 if seed is None else int(seed))
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in params.named_arrays())
    return header + body


def loads(blob: bytes) -> NetworkParams:
    if len(blob) < _HEADER.size:
        raise CheckpointError("checkpoint truncated")
    magic, version, i, h1, h2, rate, has_seed, seed = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    template = zero_params(NetworkSpec(i, h1, h2, rate))
    offset = _HEADER.size
    arrays = {}
    for name, a in template.named_arrays():
        nbytes = a.size * 8
        if offset + nbytes > len(blob):
            raise CheckpointError(f"checkpoint truncated in {name}")
        arrays[name] = np.frombuffer(blob, "<f8", a.size, offset).reshape(a.shape).astype(float)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{len(blob) - offset} trailing bytes")
    params = template.map_arrays(lambda name, _: arrays[name])
    params.seed = seed if has_seed else None
    return params


def save(params: NetworkParams, path: str | Path) -> None:
    Path(path).write_bytes(dumps(params))


def load(path: str | Path) -> NetworkParams:
    return loads(Path(path).read_bytes())
