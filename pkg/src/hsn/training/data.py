"""Paired datasets, Bayer packing and crop/flip augmentation."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from hsn.core.errors import CropOutOfBounds, DimensionMismatch, EmptyInput, OddDimensions
from hsn.core.rng import Rng
from hsn.core.types import BiasFrameDB, RawFrame


def pack_bayer(frame: RawFrame) -> np.ndarray:
    """(H, W) mosaic -> (4, H/2, W/2) planes ordered R, G1, G2, B.

    Values are (raw - black) / (white - black), not clamped, so sub-pedestal
    noise survives the round trip.
    """
    if frame.height % 2 or frame.width % 2:
        raise OddDimensions(f"Packing needs even dimensions, got {frame.width}x{frame.height}")
    x = frame.signal() / frame.dynamic_range
    return np.stack([x[dr::2, dc::2] for dr, dc in frame.pattern.packed_offsets()])


def unpack_bayer(packed: np.ndarray, template: RawFrame) -> RawFrame:
    """Inverse of ``pack_bayer``; geometry and levels come from ``template``.

    Values are rounded to the nearest count and clamped to [0, white_level].
    """
    packed = np.asarray(packed, dtype=np.float64)
    h, w = packed.shape[1] * 2, packed.shape[2] * 2
    if packed.shape[0] != 4:
        raise DimensionMismatch(f"Packed Bayer tensor needs 4 channels, got {packed.shape[0]}")
    if (h, w) != template.shape:
        raise DimensionMismatch(f"Packed size {(h, w)} does not match template {template.shape}")
    counts = packed * template.dynamic_range + template.black_level
    counts = np.clip(np.rint(counts), 0, template.white_level)
    raw = np.empty((h, w), dtype=np.uint16)
    for plane, (dr, dc) in zip(counts, template.pattern.packed_offsets(), strict=True):
        raw[dr::2, dc::2] = plane
    return template.with_data(raw)


@dataclass(frozen=True, eq=False)
class Pair:
    """One training example.

    Denoiser pairs hold a clean raw ``target`` and either a recorded noisy
    ``source`` or None (synthesized on the fly). Mini-ISP pairs hold a raw
    ``source`` and an 8-bit RGB ``target``.
    """

    target: RawFrame | np.ndarray
    source: RawFrame | None = None
    name: str = ""
    meta: dict[str, Any] = field(default_factory=dict)

    def target_shape(self) -> tuple[int, int]:
        if isinstance(self.target, RawFrame):
            return self.target.shape
        return tuple(np.asarray(self.target).shape[:2])  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class PairedDataset:
    pairs: list[Pair]
    bias_db: BiasFrameDB | None = None
    synthesize: bool = False

    def __post_init__(self) -> None:
        if not self.pairs:
            raise EmptyInput("Paired dataset is empty")
        for pair in self.pairs:
            if pair.source is None:
                if not self.synthesize:
                    raise EmptyInput(f"Pair {pair.name!r} has no source and synthesis is off")
                if not isinstance(pair.target, RawFrame):
                    raise DimensionMismatch("On-the-fly synthesis needs raw targets")
            elif pair.source.shape != pair.target_shape():
                raise DimensionMismatch(
                    f"Pair {pair.name!r}: source {pair.source.shape} != "
                    f"target {pair.target_shape()}"
                )

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, index: int) -> Pair:
        return self.pairs[index]

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.pairs)

    def subset(self, indices: list[int]) -> PairedDataset:
        return PairedDataset(
            [self.pairs[i] for i in indices], bias_db=self.bias_db, synthesize=self.synthesize
        )

    @classmethod
    def for_denoising(
        cls, clean: list[RawFrame], bias_db: BiasFrameDB | None = None
    ) -> PairedDataset:
        pairs = [Pair(target=f, name=str(f.meta.get("source_id", i))) for i, f in enumerate(clean)]
        return cls(pairs, bias_db=bias_db, synthesize=True)

    @classmethod
    def for_isp(cls, raws: list[RawFrame], rgbs: list[np.ndarray]) -> PairedDataset:
        if len(raws) != len(rgbs):
            raise DimensionMismatch(f"{len(raws)} raw frames but {len(rgbs)} RGB targets")
        pairs = [
            Pair(target=rgb, source=raw, name=str(raw.meta.get("source_id", i)))
            for i, (raw, rgb) in enumerate(zip(raws, rgbs, strict=True))
        ]
        return cls(pairs)


def split_dataset(
    dataset: PairedDataset, val_fraction: float = 0.15, seed: int = 0
) -> tuple[PairedDataset, PairedDataset | None]:
    """Deterministic held-out split; at least one pair always stays in training."""
    if not 0 <= val_fraction < 1:
        raise ValueError(f"val_fraction must be in [0, 1), got {val_fraction}")
    n = len(dataset)
    n_val = min(int(round(n * val_fraction)), n - 1)
    order = np.argsort(Rng(seed, "split").random(n), kind="stable")
    train_idx = sorted(int(i) for i in order[n_val:])
    val_idx = sorted(int(i) for i in order[:n_val])
    val = dataset.subset(val_idx) if val_idx else None
    return dataset.subset(train_idx), val


def random_crop_origin(
    rng: Rng, height: int, width: int, crop_h: int, crop_w: int | None = None
) -> tuple[int, int]:
    """Even (x, y) origin of a crop_h x crop_w window (square by default)."""
    crop_w = crop_h if crop_w is None else crop_w
    if crop_h > height or crop_w > width:
        raise CropOutOfBounds(f"Crop {crop_w}x{crop_h} larger than a {width}x{height} frame")
    x = 2 * rng.integers(0, (width - crop_w) // 2 + 1)
    y = 2 * rng.integers(0, (height - crop_h) // 2 + 1)
    return x, y


def random_flips(rng: Rng, enabled: bool = True) -> tuple[bool, bool]:
    """(horizontal, vertical) flip decisions; two draws even when disabled."""
    h, v = rng.coin(), rng.coin()
    return (h and enabled, v and enabled)


def apply_flips(x: np.ndarray, flips: tuple[bool, bool]) -> np.ndarray:
    """Flip a (C, H, W) array; packed planes keep their channel identity."""
    horizontal, vertical = flips
    if horizontal:
        x = x[:, :, ::-1]
    if vertical:
        x = x[:, ::-1, :]
    return np.ascontiguousarray(x)
