"""Versioned binary checkpoint: config header, named float64 blocks, sha256.

Layout (all integers little-endian):
    magic "QVTADCK1" | version u32 | config-json (u32 length + bytes)
    | n_blocks u32 | blocks | sha256 of everything before it
Each block: name (u16 length + utf-8) | kind u8 (0 param, 1 buffer)
    | rows u32 | cols u32 | rows*cols float64 values.
"""

import dataclasses
import hashlib
import json
import struct

import numpy as np

from .. import ndcompute as nd
from ..errors import FormatError
from .config import ModelConfig
from .params import ModelParams

MAGIC = b"QVTADCK1"
VERSION = 1

_KIND_PARAM = 0
_KIND_BUFFER = 1


def _pack_block(name, kind, arr):
    name_b = name.encode("utf-8")
    header = struct.pack("<H", len(name_b)) + name_b + struct.pack("<BII", kind, arr.shape[0], arr.shape[1])
    return header + np.ascontiguousarray(arr, dtype="<f8").tobytes()


def save_checkpoint(path, params: ModelParams):
    cfg_json = json.dumps(dataclasses.asdict(params.cfg), sort_keys=True).encode("utf-8")
    blocks = []
    for name in params.names():
        blocks.append(_pack_block(name, _KIND_PARAM, params.tensors[name].data))
    blocks.append(_pack_block("bn.running_mean", _KIND_BUFFER, params.bn.running_mean))
    blocks.append(_pack_block("bn.running_var", _KIND_BUFFER, params.bn.running_var))

    body = MAGIC + struct.pack("<I", VERSION)
    body += struct.pack("<I", len(cfg_json)) + cfg_json
    body += struct.pack("<I", len(blocks)) + b"".join(blocks)
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as fh:
        fh.write(body + digest)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError("checkpoint truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self):
        return struct.unpack("<B", self.take(1))[0]

    def u16(self):
        return struct.unpack("<H", self.take(2))[0]

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 4 + 32:
        raise FormatError("checkpoint too small")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise FormatError("checkpoint checksum mismatch")
    r = _Reader(body)
    if r.take(len(MAGIC)) != MAGIC:
        raise FormatError("bad checkpoint magic")
    version = r.u32()
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    cfg = ModelConfig.from_dict(json.loads(r.take(r.u32()).decode("utf-8")))

    n_blocks = r.u32()
    params_arrs, buffers = {}, {}
    for _ in range(n_blocks):
        name = r.take(r.u16()).decode("utf-8")
        kind = r.u8()
        rows, cols = r.u32(), r.u32()
        data = np.frombuffer(r.take(rows * cols * 8), dtype="<f8").reshape(rows, cols).copy()
        (params_arrs if kind == _KIND_PARAM else buffers)[name] = data
    if r.pos != len(body):
        raise FormatError("trailing bytes in checkpoint")
    for required in ("bn.running_mean", "bn.running_var", "pred.bn.gamma"):
        if required not in params_arrs and required not in buffers:
            raise FormatError(f"checkpoint missing block {required}")

    tensors = {name: nd.Tensor2(arr, requires_grad=True) for name, arr in params_arrs.items()}
    bn = nd.BatchNormState(tensors["pred.bn.gamma"].cols)
    bn.gamma = tensors["pred.bn.gamma"]
    bn.beta = tensors["pred.bn.beta"]
    bn.running_mean = buffers["bn.running_mean"]
    bn.running_var = buffers["bn.running_var"]
    return ModelParams(cfg, tensors, bn)
