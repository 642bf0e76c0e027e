"""Forward ISP: demosaic, digital gain, white balance, CCM, gamma, 8-bit quantization.

Used as the round-trip oracle for raw reconstruction and to generate Mini-ISP
training targets.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import ndimage

from hsn.core.errors import NegativeInput, NonPositiveGain
from hsn.core.types import BLUE, GREEN, RED, CameraProfile, RawFrame

_RB_KERNEL = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]])
_G_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 0.0]])


class WbGains(NamedTuple):
    red: float = 1.0
    blue: float = 1.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.red, 1.0, self.blue])


def _check_gains(gains: WbGains) -> None:
    if gains.red <= 0 or gains.blue <= 0:
        raise NonPositiveGain(f"White balance gains must be > 0, got {tuple(gains)}")


def gamma_compress(img: np.ndarray, gamma: float) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if np.any(img < 0):
        raise NegativeInput("gamma_compress needs non-negative values")
    return img ** (1.0 / gamma)


def apply_ccm(img: np.ndarray, ccm: np.ndarray) -> np.ndarray:
    """Each pixel p -> ccm @ p."""
    return np.asarray(img, dtype=np.float64) @ np.asarray(ccm, dtype=np.float64).T


def apply_white_balance(img: np.ndarray, gains: WbGains) -> np.ndarray:
    _check_gains(gains)
    return np.asarray(img, dtype=np.float64) * gains.as_vector()


def apply_gain(img: np.ndarray, digital_gain: float) -> np.ndarray:
    if digital_gain <= 0:
        raise NonPositiveGain(f"digital_gain must be > 0, got {digital_gain}")
    return np.asarray(img, dtype=np.float64) * digital_gain


def quantize8(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and round(v * 255)."""
    v = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def demosaic_bilinear(frame: RawFrame) -> np.ndarray:
    """Bilinear demosaic of a normalized raw frame into an (H, W, 3) float image.

    Missing samples are the average of the nearest same-channel neighbours
    (normalized convolution). Borders are mirrored about the edge sample, which
    keeps the Bayer phase of the replicated rows and columns.
    """
    raw = frame.normalized()
    masks = frame.pattern.channel_masks(frame.height, frame.width).astype(np.float64)
    out = np.empty((frame.height, frame.width, 3), dtype=np.float64)
    for channel, kernel in ((RED, _RB_KERNEL), (GREEN, _G_KERNEL), (BLUE, _RB_KERNEL)):
        mask = masks[channel]
        num = ndimage.convolve(raw * mask, kernel, mode="mirror")
        den = ndimage.convolve(mask, kernel, mode="mirror")
        out[:, :, channel] = num / den
    return out


def forward_isp(frame: RawFrame, gains: WbGains, profile: CameraProfile) -> np.ndarray:
    img = demosaic_bilinear(frame)
    img = apply_gain(img, profile.digital_gain)
    img = apply_white_balance(img, gains)
    img = apply_ccm(img, profile.ccm)
    img = np.clip(img, 0.0, 1.0)
    img = gamma_compress(img, profile.gamma)
    return quantize8(img)
