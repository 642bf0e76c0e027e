"""Inference chain: denoise raw, white balance, Mini-ISP, 8-bit output."""

from __future__ import annotations

import numpy as np

from hsn.core.errors import InvariantViolation
from hsn.core.types import RawFrame
from hsn.isp.forward import WbGains, apply_white_balance, demosaic_bilinear, quantize8
from hsn.metrics.quality import MetricConfig, psnr
from hsn.nn.models import ConvNet
from hsn.training.data import pack_bayer, unpack_bayer


def frame_gains(frame: RawFrame) -> WbGains:
    """White-balance gains recorded in the frame sidecar, unit gains otherwise."""
    return WbGains(
        red=float(frame.meta.get("g_red", 1.0)),
        blue=float(frame.meta.get("g_blue", 1.0)),
    )


def preprocess_for_isp(frame: RawFrame, gains: WbGains) -> np.ndarray:
    """Black/white level normalization, bilinear demosaic and white balance; (H, W, 3)."""
    return apply_white_balance(demosaic_bilinear(frame), gains)


def gain_baseline(noisy: RawFrame, R: float) -> RawFrame:
    """Brightness compensation only: (noisy - black) * R + black, clamped to [0, white]."""
    if R < 1:
        raise InvariantViolation(f"Gain ratio must be >= 1, got {R}")
    out = noisy.signal() * R + noisy.black_level
    out = np.clip(np.rint(out), 0, noisy.white_level).astype(np.uint16)
    return noisy.with_data(out, baseline_gain=R)


def denoiser_input(noisy: RawFrame, R: float) -> np.ndarray:
    """Packed, normalized and brightness-compensated (4, H/2, W/2) network input."""
    return pack_bayer(noisy) * R


def denoise_raw(noisy: RawFrame, denoiser: ConvNet, R: float) -> RawFrame:
    x = denoiser_input(noisy, R)[None].astype(denoiser.dtype)
    y = denoiser(x)[0]
    return unpack_bayer(y, noisy)


def run_mini_isp(linear: np.ndarray, mini_isp: ConvNet) -> np.ndarray:
    """(H, W, 3) linear input -> (H, W, 3) display-referred output, not clamped."""
    x = np.asarray(linear).transpose(2, 0, 1)[None].astype(mini_isp.dtype)
    return mini_isp(x)[0].transpose(1, 2, 0).astype(np.float64)


def denoise_pipeline(
    noisy: RawFrame,
    denoiser: ConvNet,
    mini_isp: ConvNet,
    gains: WbGains | None = None,
    R: float | None = None,
) -> np.ndarray:
    """Noisy short-exposure raw -> 8-bit RGB.

    ``gains`` and ``R`` default to the values recorded in the frame metadata.
    """
    gains = gains if gains is not None else frame_gains(noisy)
    R = R if R is not None else float(noisy.meta.get("ratio_R", 1.0))
    denoised = denoise_raw(noisy, denoiser, R)
    rgb = run_mini_isp(preprocess_for_isp(denoised, gains), mini_isp)
    return quantize8(np.clip(rgb, 0.0, 1.0))


def raw_psnr(pred: RawFrame, target: RawFrame) -> float:
    """PSNR of black-subtracted counts, peak = target dynamic range."""
    return psnr(pred.signal(), target.signal(), MetricConfig(peak=float(target.dynamic_range)))
