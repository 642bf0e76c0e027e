"""HSRW raw container, JSON sidecars and the on-disk bias frame database.

HSRW layout (all integers little-endian)::

    0-3   magic "HSRW"
    4     version (1)
    5     pattern code (0=RGGB, 1=BGGR, 2=GRBG, 3=GBRG)
    6-7   reserved, 0
    8-11  width   u32
    12-15 height  u32
    16-17 black_level u16
    18-19 white_level u16
    20-27 shutter_s f64 (0 if unknown)
    28-31 reserved, 0
    32-   width*height u16 samples, row-major
"""

from __future__ import annotations

import json
import struct
from collections.abc import Iterator
from pathlib import Path
from typing import Any

import numpy as np

from hsn.core.errors import InvariantViolation, MalformedHeader, TruncatedData
from hsn.core.schema import (
    BIAS_MANIFEST_NAME,
    EXPECTED_MANIFEST_KEYS,
    HSRW_HEADER_SIZE,
    HSRW_MAGIC,
    HSRW_VERSION,
)
from hsn.core.types import BayerPattern, BiasFrameDB, RawFrame

_HEADER = struct.Struct("<4sBBHIIHHdI")
assert _HEADER.size == HSRW_HEADER_SIZE


def encode_raw(frame: RawFrame) -> bytes:
    header = _HEADER.pack(
        HSRW_MAGIC,
        HSRW_VERSION,
        frame.pattern.value,
        0,
        frame.width,
        frame.height,
        frame.black_level,
        frame.white_level,
        float(frame.shutter_s) if frame.shutter_s is not None else 0.0,
        0,
    )
    return header + frame.data.astype("<u2", copy=False).tobytes(order="C")


def decode_raw(buf: bytes) -> RawFrame:
    if len(buf) < HSRW_HEADER_SIZE:
        raise MalformedHeader(f"HSRW header needs {HSRW_HEADER_SIZE} bytes, got {len(buf)}")
    magic, version, code, _, width, height, black, white, shutter, _ = _HEADER.unpack_from(buf)
    if magic != HSRW_MAGIC:
        raise MalformedHeader(f"Bad magic {magic!r}, expected {HSRW_MAGIC!r}")
    if version != HSRW_VERSION:
        raise MalformedHeader(f"Unsupported HSRW version {version}")
    if code > 3:
        raise MalformedHeader(f"Unknown Bayer pattern code {code}")
    if black >= white:
        raise InvariantViolation(f"black_level {black} >= white_level {white}")
    need = width * height * 2
    payload = memoryview(buf)[HSRW_HEADER_SIZE:]
    if len(payload) < need:
        raise TruncatedData(
            f"HSRW payload has {len(payload)} bytes, {width}x{height} frame needs {need}"
        )
    data = np.frombuffer(payload[:need], dtype="<u2").reshape(height, width).astype(np.uint16)
    return RawFrame(
        data=data,
        pattern=BayerPattern.from_code(code),
        black_level=black,
        white_level=white,
        shutter_s=shutter if shutter != 0.0 else None,
    )


def read_raw(path: str | Path) -> RawFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Raw frame not found: {path}")
    return decode_raw(path.read_bytes())


def write_raw(frame: RawFrame, path: str | Path) -> None:
    Path(path).write_bytes(encode_raw(frame))


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".json")


def write_sidecar(path: str | Path, meta: dict[str, Any]) -> Path:
    out = sidecar_path(path)
    out.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return out


def read_sidecar(path: str | Path, required: set[str] | None = None) -> dict[str, Any]:
    """Sidecar next to ``path``; empty dict when absent and nothing is required."""
    side = sidecar_path(path)
    if not side.exists():
        if required:
            raise FileNotFoundError(f"Sidecar not found: {side}")
        return {}
    meta = json.loads(side.read_text())
    missing = (required or set()) - set(meta)
    if missing:
        raise ValueError(f"Missing expected keys in sidecar {side.name}: {missing}")
    return meta


def write_raw_with_sidecar(frame: RawFrame, path: str | Path) -> None:
    write_raw(frame, path)
    if frame.meta:
        write_sidecar(path, frame.meta)


def read_raw_with_sidecar(path: str | Path, required: set[str] | None = None) -> RawFrame:
    frame = read_raw(path)
    meta = read_sidecar(path, required)
    return frame.with_data(frame.data, **meta) if meta else frame


def iter_raw_dir(directory: str | Path) -> Iterator[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Directory not found: {directory}")
    yield from sorted(directory.glob("*.hsrw"))


def load_bias_db(directory: str | Path) -> BiasFrameDB:
    directory = Path(directory)
    manifest_path = directory / BIAS_MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"Bias manifest not found: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    missing = EXPECTED_MANIFEST_KEYS - set(manifest)
    if missing:
        raise ValueError(f"Missing expected keys in bias manifest: {missing}")

    entries: dict[float, list[RawFrame]] = {}
    names: dict[float, list[str]] = {}
    for shutter, files in manifest["frames"].items():
        key = float(shutter)
        entries[key] = [read_raw(directory / name) for name in files]
        names[key] = list(files)
    return BiasFrameDB(
        entries=entries,
        device=str(manifest["device"]),
        notes=str(manifest["notes"]),
        names=names,
    )


def save_bias_db(db: BiasFrameDB, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frames: dict[str, list[str]] = {}
    for shutter in db.shutters():
        files = []
        for frame, name in zip(db.entries[shutter], db.names[shutter], strict=True):
            file_name = name if name.endswith(".hsrw") else f"{name}.hsrw"
            write_raw(frame, directory / file_name)
            files.append(file_name)
        frames[repr(shutter)] = files
    manifest = {"device": db.device, "notes": db.notes, "frames": frames}
    path = directory / BIAS_MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2))
    return path
