"""Versioned binary checkpoint container.

Layout (little-endian)::

    magic  b"DCKP"          4 bytes
    version                 uint16
    config length, config   uint32 + UTF-8 JSON (model config + metadata)
    tensor count            uint32
    per tensor: name length (uint16), name, dtype code (uint8), ndim (uint8),
                dims (uint32 each), raw IEEE-754 / int64 data
    sha256 of everything above   32 bytes
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from pathlib import Path

import numpy as np
import torch

from domaincraft import DomaincraftError
from domaincraft.model.network import ModelConfig, Seq2Seq

MAGIC = b"DCKP"
VERSION = 1
_DTYPES = {0: "<f4", 1: "<f8", 2: "<i8"}
_CODES = {torch.float32: 0, torch.float64: 1, torch.int64: 2}


class CheckpointError(DomaincraftError):
    pass


def checkpoint_bytes(model: Seq2Seq, meta: dict | None = None) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", VERSION))
    header = json.dumps({"model": model.cfg.to_json(), "meta": meta or {}}, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(header)))
    buf.write(header)
    state = model.state_dict()
    buf.write(struct.pack("<I", len(state)))
    for name, tensor in state.items():
        code = _CODES.get(tensor.dtype)
        if code is None:
            raise CheckpointError(f"unsupported dtype {tensor.dtype} for {name}")
        raw = name.encode("utf-8")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<BB", code, tensor.dim()))
        buf.write(struct.pack(f"<{tensor.dim()}I", *tensor.shape))
        buf.write(tensor.detach().cpu().contiguous().numpy().astype(_DTYPES[code], copy=False).tobytes())
    body = buf.getvalue()
    return body + hashlib.sha256(body).digest()


def save_checkpoint(model: Seq2Seq, path, meta: dict | None = None) -> str:
    """Write the checkpoint atomically and return its sha256 hex digest."""
    data = checkpoint_bytes(model, meta)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    return hashlib.sha256(data).hexdigest()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("truncated checkpoint")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path, expect: ModelConfig | None = None) -> tuple[Seq2Seq, dict]:
    """Return ``(model, meta)``; raises CheckpointError on any corruption or mismatch."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 2 + 32 or data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: checksum mismatch (file corrupted)")
    r = _Reader(body)
    r.take(4)
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (hlen,) = r.unpack("<I")
    header = json.loads(r.take(hlen).decode("utf-8"))
    cfg = ModelConfig(**header["model"])
    if expect is not None and expect != cfg:
        raise CheckpointError(f"{path}: model config {cfg} does not match expected {expect}")
    (count,) = r.unpack("<I")
    state = {}
    dtype = None
    for _ in range(count):
        (nlen,) = r.unpack("<H")
        name = r.take(nlen).decode("utf-8")
        code, ndim = r.unpack("<BB")
        if code not in _DTYPES:
            raise CheckpointError(f"{path}: bad dtype code {code}")
        shape = r.unpack(f"<{ndim}I")
        np_dtype = np.dtype(_DTYPES[code])
        nbytes = int(np.prod(shape, dtype=np.int64)) * np_dtype.itemsize
        arr = np.frombuffer(r.take(nbytes), dtype=np_dtype).reshape(shape).copy()
        state[name] = torch.from_numpy(arr)
        if code != 2:
            dtype = state[name].dtype
    if r.pos != len(body):
        raise CheckpointError(f"{path}: trailing bytes after tensors")
    model = Seq2Seq(cfg)
    if dtype is not None:
        model = model.to(dtype)
    expected = model.state_dict()
    if set(expected) != set(state):
        raise CheckpointError(f"{path}: tensor names do not match the model layout")
    for name, t in state.items():
        if tuple(expected[name].shape) != tuple(t.shape):
            raise CheckpointError(f"{path}: shape mismatch for {name}: {tuple(t.shape)}")
    model.load_state_dict(state)
    model.eval()
    return model, header.get("meta", {})
