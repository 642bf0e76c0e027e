"""Model checkpoints.

Layout (little-endian)::

    "HSNN" | u8 version | 3 reserved bytes
    u32 length + architecture JSON
    u32 array count, then per array: u8 ndim, ndim x u32 dims, f32 payload
    u32 length + training manifest JSON

Arrays are the model parameters, followed by the Adam first and second
moments when an optimizer state is saved; the manifest records the Adam
step counter and hyper-parameters so a resumed run continues exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from hsn.core.errors import ArchMismatch, MalformedCheckpoint
from hsn.core.schema import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    EXPECTED_CHECKPOINT_ARCH_KEYS,
)
from hsn.nn.models import ConvNet, model_from_architecture
from hsn.nn.optim import AdamState


def _pack_json(obj: dict[str, Any]) -> bytes:
    raw = json.dumps(obj, sort_keys=True).encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _pack_array(a: np.ndarray) -> bytes:
    a = np.ascontiguousarray(a, dtype="<f4")
    head = struct.pack("<B", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
    return head + a.tobytes()


class _Reader:
    def __init__(self, buf: bytes) -> None:
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise MalformedCheckpoint("Checkpoint is truncated")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str) -> tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def json(self) -> dict[str, Any]:
        (n,) = self.unpack("<I")
        try:
            return json.loads(self.take(n).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedCheckpoint(f"Checkpoint JSON section is corrupt: {exc}") from exc

    def array(self) -> np.ndarray:
        (ndim,) = self.unpack("<B")
        shape = self.unpack(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(self.take(4 * count), dtype="<f4")
        return data.reshape(shape).astype(np.float32)


def encode_checkpoint(
    model: ConvNet,
    manifest: dict[str, Any] | None = None,
    optimizer: AdamState | None = None,
) -> bytes:
    manifest = dict(manifest or {})
    arrays = list(model.parameters())
    if optimizer is not None:
        arrays += list(optimizer.m) + list(optimizer.v)
        manifest["optimizer"] = {
            "t": optimizer.t,
            "beta1": optimizer.beta1,
            "beta2": optimizer.beta2,
            "eps": optimizer.eps,
        }
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<B3x", CHECKPOINT_VERSION),
        _pack_json(model.architecture()),
        struct.pack("<I", len(arrays)),
        *(_pack_array(a) for a in arrays),
        _pack_json(manifest),
    ]
    return b"".join(parts)


def checkpoint_save(
    model: ConvNet,
    path: str | Path,
    manifest: dict[str, Any] | None = None,
    optimizer: AdamState | None = None,
) -> Path:
    path = Path(path)
    path.write_bytes(encode_checkpoint(model, manifest, optimizer))
    return path


def decode_checkpoint(
    buf: bytes, model: ConvNet | None = None
) -> tuple[ConvNet, dict[str, Any], AdamState | None]:
    r = _Reader(buf)
    if r.take(4) != CHECKPOINT_MAGIC:
        raise MalformedCheckpoint("Bad checkpoint magic")
    (version,) = r.unpack("<B3x")
    if version != CHECKPOINT_VERSION:
        raise MalformedCheckpoint(f"Unsupported checkpoint version {version}")
    arch = r.json()
    missing = EXPECTED_CHECKPOINT_ARCH_KEYS - set(arch)
    if missing:
        raise MalformedCheckpoint(f"Missing expected architecture keys: {missing}")
    (n_arrays,) = r.unpack("<I")
    arrays = [r.array() for _ in range(n_arrays)]
    manifest = r.json()

    if model is None:
        model = model_from_architecture(arch)
    elif model.architecture() != arch:
        raise ArchMismatch(
            f"Checkpoint architecture {arch['widths']} ({arch['kind']}) does not match "
            f"model {model.widths} ({model.kind})"
        )

    n_params = len(model.parameters())
    model.set_parameters(arrays[:n_params])

    optimizer = None
    opt = manifest.get("optimizer")
    if opt is not None:
        if n_arrays != 3 * n_params:
            raise MalformedCheckpoint("Optimizer moments do not match the parameter count")
        optimizer = AdamState(
            m=arrays[n_params : 2 * n_params],
            v=arrays[2 * n_params :],
            t=int(opt["t"]),
            beta1=float(opt["beta1"]),
            beta2=float(opt["beta2"]),
            eps=float(opt["eps"]),
        )
    elif n_arrays != n_params:
        raise MalformedCheckpoint(f"Expected {n_params} arrays, found {n_arrays}")
    return model, manifest, optimizer


def checkpoint_load(
    path: str | Path, model: ConvNet | None = None
) -> tuple[ConvNet, dict[str, Any], AdamState | None]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes(), model)
