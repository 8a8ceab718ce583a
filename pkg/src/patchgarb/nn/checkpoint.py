"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"PGCK"  u16 version  u32 arch_json_len  arch_json (UTF-8)
    u32 layer_count
    per layer:   u16 name_len  name  u32 tensor_count
      per tensor: u16 key_len  key  u8 rank  u32 dims[rank]  f32 data[prod(dims)]

Only layers that own parameters are written, in model order.
"""
from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ArchitectureMismatchError, CorruptCheckpointError
from .model import ArchConfig, Model, build_model

MAGIC = b"PGCK"
VERSION = 1


def _pack_str(s: str, fmt="<H") -> bytes:
    raw = s.encode("utf-8")
    return struct.pack(fmt, len(raw)) + raw


def checkpoint_bytes(model: Model) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", VERSION))
    buf.write(_pack_str(json.dumps(model.arch.to_dict(), sort_keys=True), "<I"))
    owners = [layer for layer in model.layers if layer.params]
    buf.write(struct.pack("<I", len(owners)))
    for layer in owners:
        buf.write(_pack_str(layer.name))
        buf.write(struct.pack("<I", len(layer.params)))
        for key, arr in layer.params.items():
            buf.write(_pack_str(key))
            buf.write(struct.pack("<B", arr.ndim))
            buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            buf.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return buf.getvalue()


def checkpoint_save(model: Model, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(model))
    return path


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptCheckpointError("checkpoint is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self, fmt="<H") -> str:
        (n,) = self.unpack(fmt)
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptCheckpointError("bad string in checkpoint") from exc


def checkpoint_load(path, arch: ArchConfig | None = None) -> Model:
    """Load a checkpoint; if ``arch`` is given the file must match it exactly."""
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise CorruptCheckpointError("bad magic; not a checkpoint file")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise CorruptCheckpointError(f"unsupported checkpoint version {version}")
    try:
        stored = ArchConfig.from_dict(json.loads(r.string("<I")))
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptCheckpointError("unreadable architecture header") from exc
    if arch is not None and arch != stored:
        raise ArchitectureMismatchError(
            f"checkpoint architecture {stored} does not match requested {arch}")
    model = build_model(stored, seed=0)
    (n_layers,) = r.unpack("<I")
    owners = [layer for layer in model.layers if layer.params]
    if n_layers != len(owners):
        raise ArchitectureMismatchError(f"{n_layers} parameter layers, expected {len(owners)}")
    for layer in owners:
        name = r.string()
        if name != layer.name:
            raise ArchitectureMismatchError(f"layer {name!r} where {layer.name!r} expected")
        (n_tensors,) = r.unpack("<I")
        if n_tensors != len(layer.params):
            raise ArchitectureMismatchError(f"{name}: {n_tensors} tensors")
        for _ in range(n_tensors):
            key = r.string()
            (rank,) = r.unpack("<B")
            dims = r.unpack(f"<{rank}I")
            if key not in layer.params or tuple(dims) != layer.params[key].shape:
                raise ArchitectureMismatchError(f"{name}/{key}: unexpected shape {dims}")
            count = int(np.prod(dims))
            arr = np.frombuffer(r.take(4 * count), dtype="<f4").astype(np.float32)
            layer.params[key] = arr.reshape(dims)
    if r.pos != len(r.data):
        raise CorruptCheckpointError("trailing bytes after checkpoint payload")
    model.set_mode("inference")
    return model
