"""Long-exposure raw reconstruction from 8-bit RGB images.

The chain follows the usual unprocessing steps without inverse tone mapping:
dequantize -> gamma decompression -> inverse CCM -> inverse white balance
(randomly sampled gains) -> inverse digital gain -> Bayer mosaic.

Dequantization stands in for a learned high-bit reconstructor: each 8-bit
code is spread uniformly over its quantization cell so the resulting raw
histogram is dense instead of a comb of 256 spikes.
"""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from hsn.core.errors import (
    InvariantViolation,
    NegativeInput,
    NonPositiveGain,
    OddDimensions,
    SingularMatrix,
)
from hsn.core.imageio import check_rgb8
from hsn.core.rng import Rng, rng_uniform
from hsn.core.types import CameraProfile, RawFrame
from hsn.isp.forward import WbGains


@dataclass(frozen=True, eq=False)
class ReconstructionConfig:
    gamma: float = 3.0
    profile: CameraProfile = field(default_factory=CameraProfile)
    dither: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise InvariantViolation(f"gamma must be > 0, got {self.gamma}")


def dequantize(img: np.ndarray, rng: Rng | None, dither: bool = True) -> np.ndarray:
    """8-bit codes to floats in [0, 1): (v + u) / 256, u ~ U[0, 1) or u = 0.5."""
    img = check_rgb8(img).astype(np.float64)
    if dither:
        if rng is None:
            raise ValueError("dequantize with dither needs an Rng")
        offset = rng.random(img.shape)
    else:
        offset = 0.5
    return (img + offset) / 256.0


def gamma_decompress(img: np.ndarray, gamma: float) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if np.any(img < 0):
        raise NegativeInput("gamma_decompress needs non-negative values")
    return img**gamma


def invert_ccm(img: np.ndarray, ccm: np.ndarray) -> np.ndarray:
    """Each pixel p -> ccm^-1 @ p."""
    ccm = np.asarray(ccm, dtype=np.float64)
    if abs(np.linalg.det(ccm)) <= 1e-9:
        raise SingularMatrix("CCM is not invertible")
    return np.asarray(img, dtype=np.float64) @ np.linalg.inv(ccm).T


def sample_wb_gains(profile: CameraProfile, rng: Rng) -> WbGains:
    red = rng_uniform(rng, *profile.wb_red_range)
    blue = rng_uniform(rng, *profile.wb_blue_range)
    return WbGains(red, blue)


def invert_white_balance(img: np.ndarray, gains: WbGains) -> np.ndarray:
    if gains.red <= 0 or gains.blue <= 0:
        raise NonPositiveGain(f"White balance gains must be > 0, got {tuple(gains)}")
    return np.asarray(img, dtype=np.float64) / gains.as_vector()


def invert_gain(img: np.ndarray, digital_gain: float) -> np.ndarray:
    if digital_gain <= 0:
        raise NonPositiveGain(f"digital_gain must be > 0, got {digital_gain}")
    return np.asarray(img, dtype=np.float64) / digital_gain


def mosaic(
    img: np.ndarray, profile: CameraProfile, shutter_s: float | None = None
) -> RawFrame:
    """Sample a camera-space linear image on the profile's Bayer grid.

    raw = round(clamp(v, 0, 1) * (white - black)) + black, rounding half away
    from zero. Negative intermediates are only clamped here.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    if h % 2 or w % 2:
        raise OddDimensions(f"Mosaic needs even dimensions, got {w}x{h}")
    masks = profile.pattern.channel_masks(h, w)
    plane = np.sum(np.moveaxis(img, 2, 0) * masks, axis=0)
    scale = profile.white_level - profile.black_level
    counts = np.floor(np.clip(plane, 0.0, 1.0) * scale + 0.5) + profile.black_level
    return RawFrame(
        data=counts.astype(np.uint16),
        pattern=profile.pattern,
        black_level=profile.black_level,
        white_level=profile.white_level,
        shutter_s=shutter_s,
    )


def reconstruct_long_exposure(
    img: np.ndarray,
    cfg: ReconstructionConfig,
    rng: Rng | None = None,
    source_id: str = "",
    shutter_s: float | None = None,
) -> RawFrame:
    """Full reconstruction chain; sampled gains go to the returned frame's ``meta``."""
    img = check_rgb8(img)
    h, w = img.shape[:2]
    if h % 2 or w % 2:
        raise OddDimensions(f"Reconstruction needs even dimensions, got {w}x{h}")
    rng = rng if rng is not None else Rng(cfg.seed)
    profile = cfg.profile

    linear = dequantize(img, rng.derive("dither"), cfg.dither)
    linear = gamma_decompress(linear, cfg.gamma)
    linear = invert_ccm(linear, profile.ccm)
    gains = sample_wb_gains(profile, rng.derive("wb"))
    linear = invert_white_balance(linear, gains)
    linear = invert_gain(linear, profile.digital_gain)
    frame = mosaic(linear, profile, shutter_s=shutter_s)

    return frame.with_data(
        frame.data,
        source_id=source_id,
        gamma=cfg.gamma,
        g_red=gains.red,
        g_blue=gains.blue,
        digital_gain=profile.digital_gain,
        seed=rng.seed,
        stream=list(rng.keys),
    )


def reconstruct_batch(
    images: Sequence[np.ndarray],
    cfg: ReconstructionConfig,
    source_ids: Sequence[str] | None = None,
    workers: int = 1,
    shutter_s: float | None = None,
) -> list[RawFrame]:
    """Reconstruct many images; image i always uses the stream (seed, i)."""
    ids = list(source_ids) if source_ids is not None else [str(i) for i in range(len(images))]
    base = Rng(cfg.seed)

    def one(i: int) -> RawFrame:
        return reconstruct_long_exposure(
            images[i], cfg, base.derive(i), source_id=ids[i], shutter_s=shutter_s
        )

    if workers <= 1:
        return [one(i) for i in range(len(images))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(len(images))))


def profile_with_gamma(cfg: ReconstructionConfig) -> CameraProfile:
    """Profile whose forward gamma matches the reconstruction gamma."""
    return replace(cfg.profile, gamma=cfg.gamma)
