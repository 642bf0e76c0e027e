"""Domain types shared by every module.

Image conventions used throughout the package (plain numpy arrays):

- linear image: float64 array of shape (H, W, 3), linear light, nominal range [0, 1];
- 8-bit RGB image: uint8 array of shape (H, W, 3);
- raw frame: ``RawFrame`` wrapping a (H, W) uint16 mosaic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np

from hsn.core.errors import (
    CropOutOfBounds,
    InvariantViolation,
    SingularMatrix,
    UnknownShutter,
)

RED, GREEN, BLUE = 0, 1, 2


class BayerPattern(Enum):
    RGGB = 0
    BGGR = 1
    GRBG = 2
    GBRG = 3

    @classmethod
    def from_code(cls, code: int) -> BayerPattern:
        try:
            return cls(code)
        except ValueError as exc:
            raise InvariantViolation(f"Unknown Bayer pattern code: {code}") from exc

    @classmethod
    def from_name(cls, name: str) -> BayerPattern:
        try:
            return cls[name.upper()]
        except KeyError as exc:
            raise InvariantViolation(f"Unknown Bayer pattern: {name!r}") from exc

    def channel_at(self, row: int, col: int) -> int:
        return _LAYOUTS[self][row % 2][col % 2]

    def channel_masks(self, height: int, width: int) -> np.ndarray:
        """Boolean (3, H, W) array, True where each channel is natively sampled."""
        masks = np.zeros((3, height, width), dtype=bool)
        for dr in range(2):
            for dc in range(2):
                masks[self.channel_at(dr, dc), dr::2, dc::2] = True
        return masks

    def packed_offsets(self) -> tuple[tuple[int, int], ...]:
        """Quad offsets of (R, G1, G2, B); G1 shares the row of R."""
        sites = [(dr, dc) for dr in range(2) for dc in range(2)]
        r = next(s for s in sites if self.channel_at(*s) == RED)
        b = next(s for s in sites if self.channel_at(*s) == BLUE)
        greens = [s for s in sites if self.channel_at(*s) == GREEN]
        g1 = next(s for s in greens if s[0] == r[0])
        g2 = next(s for s in greens if s != g1)
        return (r, g1, g2, b)


_LAYOUTS = {
    BayerPattern.RGGB: ((RED, GREEN), (GREEN, BLUE)),
    BayerPattern.BGGR: ((BLUE, GREEN), (GREEN, RED)),
    BayerPattern.GRBG: ((GREEN, RED), (BLUE, GREEN)),
    BayerPattern.GBRG: ((GREEN, BLUE), (RED, GREEN)),
}


@dataclass(frozen=True, eq=False)
class RawFrame:
    """Single-channel mosaicked sensor image.

    ``data`` is a (height, width) uint16 array; 12-bit sensors occupy the low
    part of the 16-bit container and ``white_level`` encodes the true ceiling.
    ``meta`` carries the sidecar metadata produced by reconstruction and
    synthesis (sampled gains, ratio, bias frame id, seed).
    """

    data: np.ndarray
    pattern: BayerPattern = BayerPattern.RGGB
    black_level: int = 0
    white_level: int = 4095
    shutter_s: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise InvariantViolation(f"Raw data must be 2-D, got shape {data.shape}")
        if data.dtype != np.uint16:
            if data.size and (data.min() < 0 or data.max() > 65535):
                raise InvariantViolation("Raw values must fit in 16 bits")
            data = data.astype(np.uint16)
        h, w = data.shape
        if h % 2 or w % 2:
            raise InvariantViolation(f"Raw frame must have even dimensions, got {w}x{h}")
        if not 0 <= self.black_level < self.white_level <= 65535:
            raise InvariantViolation(
                f"Need 0 <= black_level < white_level <= 65535, "
                f"got black={self.black_level} white={self.white_level}"
            )
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "black_level", int(self.black_level))
        object.__setattr__(self, "white_level", int(self.white_level))

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def dynamic_range(self) -> int:
        return self.white_level - self.black_level

    def geometry(self) -> tuple[int, int, BayerPattern, int]:
        return (self.height, self.width, self.pattern, self.black_level)

    def normalized(self) -> np.ndarray:
        """(raw - black) / (white - black), clamped at 0, as float64."""
        x = (self.data.astype(np.float64) - self.black_level) / self.dynamic_range
        return np.maximum(x, 0.0)

    def signal(self) -> np.ndarray:
        """Black-subtracted counts as float64 (may be negative)."""
        return self.data.astype(np.float64) - self.black_level

    def with_data(self, data: np.ndarray, **meta: Any) -> RawFrame:
        return replace(self, data=data, meta={**self.meta, **meta})

    def crop(self, x: int, y: int, w: int, h: int) -> RawFrame:
        check_crop((x, y, w, h), self.width, self.height)
        pattern = self.pattern
        if x % 2 or y % 2:
            pattern = _shifted_pattern(self.pattern, y % 2, x % 2)
        return replace(self, data=self.data[y : y + h, x : x + w], pattern=pattern)


def _shifted_pattern(pattern: BayerPattern, dr: int, dc: int) -> BayerPattern:
    layout = tuple(
        tuple(pattern.channel_at(r + dr, c + dc) for c in range(2)) for r in range(2)
    )
    return next(p for p, lay in _LAYOUTS.items() if lay == layout)


def check_crop(crop: tuple[int, int, int, int], width: int, height: int) -> None:
    x, y, w, h = crop
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > width or y + h > height:
        raise CropOutOfBounds(f"Crop {crop} outside a {width}x{height} frame")


@dataclass(frozen=True, eq=False)
class CameraProfile:
    """Sensor constants.

    ``K`` is the system gain in raw counts per photoelectron. The HSC metadata
    lacks a CCM and Bayer layout, so both are plain profile inputs.
    """

    K: float = 0.4
    ccm: np.ndarray = field(default_factory=lambda: np.eye(3))
    wb_red_range: tuple[float, float] = (1.4, 2.4)
    wb_blue_range: tuple[float, float] = (1.4, 2.4)
    digital_gain: float = 1.0
    gamma: float = 3.0
    black_level: int = 129
    white_level: int = 4095
    bit_depth: int = 12
    pattern: BayerPattern = BayerPattern.RGGB

    def __post_init__(self) -> None:
        if self.K <= 0:
            raise InvariantViolation(f"System gain K must be > 0, got {self.K}")
        if self.digital_gain <= 0:
            raise InvariantViolation(f"digital_gain must be > 0, got {self.digital_gain}")
        if self.gamma <= 0:
            raise InvariantViolation(f"gamma must be > 0, got {self.gamma}")
        ccm = np.array(self.ccm, dtype=np.float64)
        if ccm.shape != (3, 3):
            raise InvariantViolation(f"CCM must be 3x3, got {ccm.shape}")
        if abs(np.linalg.det(ccm)) <= 1e-9:
            raise SingularMatrix("CCM is not invertible")
        ccm.setflags(write=False)
        object.__setattr__(self, "ccm", ccm)
        for name in ("wb_red_range", "wb_blue_range"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not 0 < lo <= hi:
                raise InvariantViolation(f"{name} must satisfy 0 < low <= high, got {(lo, hi)}")
            object.__setattr__(self, name, (lo, hi))
        if not 0 <= self.black_level < self.white_level <= 65535:
            raise InvariantViolation(
                f"Need 0 <= black_level < white_level <= 65535, "
                f"got black={self.black_level} white={self.white_level}"
            )
        if self.white_level > 2**self.bit_depth - 1:
            raise InvariantViolation(
                f"white_level {self.white_level} exceeds a {self.bit_depth}-bit range"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "K": self.K,
            "ccm": self.ccm.tolist(),
            "wb_red_range": list(self.wb_red_range),
            "wb_blue_range": list(self.wb_blue_range),
            "digital_gain": self.digital_gain,
            "gamma": self.gamma,
            "black_level": self.black_level,
            "white_level": self.white_level,
            "bit_depth": self.bit_depth,
            "pattern": self.pattern.name,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> CameraProfile:
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"Unknown camera profile keys: {unknown}")
        if "pattern" in d and not isinstance(d["pattern"], BayerPattern):
            d["pattern"] = BayerPattern.from_name(str(d["pattern"]))
        for key in ("wb_red_range", "wb_blue_range"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def default_profile(**overrides: Any) -> CameraProfile:
    """Desk-scale 12-bit profile: pedestal 129, white 4095, K 0.4, identity CCM."""
    return replace(CameraProfile(), **overrides) if overrides else CameraProfile()


@dataclass(frozen=True, eq=False)
class BiasFrameDB:
    """Dark frames keyed by shutter speed (seconds).

    ``names`` mirrors ``entries`` with the on-disk file name of each frame and
    is used as the frame id recorded in synthesis sidecars.
    """

    entries: dict[float, list[RawFrame]]
    device: str = ""
    notes: str = ""
    names: dict[float, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.entries:
            raise InvariantViolation("Bias frame database is empty")
        entries = {float(k): list(v) for k, v in self.entries.items()}
        for shutter, frames in entries.items():
            if not frames:
                raise InvariantViolation(f"Empty bias bucket for shutter {shutter}")
            ref = frames[0].geometry()
            for f in frames[1:]:
                if f.geometry() != ref:
                    raise InvariantViolation(
                        f"Bias frames for shutter {shutter} differ in geometry: "
                        f"{f.geometry()} vs {ref}"
                    )
        names = {float(k): list(v) for k, v in self.names.items()}
        for shutter, frames in entries.items():
            if shutter not in names or len(names[shutter]) != len(frames):
                names[shutter] = [f"{shutter:g}s_{i:04d}" for i in range(len(frames))]
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "names", names)

    def shutters(self) -> list[float]:
        return sorted(self.entries)

    def key_for(self, shutter_s: float) -> float:
        for key in self.entries:
            if math.isclose(key, shutter_s, rel_tol=1e-9, abs_tol=0.0):
                return key
        raise UnknownShutter(
            f"No bias frames for shutter {shutter_s}s; available: {self.shutters()}"
        )

    def bucket(self, shutter_s: float) -> list[RawFrame]:
        return self.entries[self.key_for(shutter_s)]

    def frame_id(self, shutter_s: float, index: int) -> str:
        return self.names[self.key_for(shutter_s)][index]

    def resolve_shutter(self, shutter_s: float | None) -> float:
        """Bucket key for ``shutter_s``; with None the database must hold a single bucket."""
        if shutter_s is not None:
            return self.key_for(shutter_s)
        if len(self.entries) == 1:
            return next(iter(self.entries))
        raise UnknownShutter(
            f"Shutter speed required to pick a bias bucket among {self.shutters()}"
        )
