"""PSNR and SSIM.

SSIM follows the usual Gaussian-window formulation, evaluated on the
windows lying fully inside the image ("valid" correlation), with per-channel
maps averaged for multi-channel images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from hsn.core.errors import DimensionMismatch, ImageTooSmall, InvariantViolation


@dataclass(frozen=True)
class MetricConfig:
    peak: float = 1.0
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    psnr_cap: float = 100.0

    def __post_init__(self) -> None:
        if self.peak <= 0:
            raise InvariantViolation(f"peak must be > 0, got {self.peak}")
        if self.ssim_window < 3 or self.ssim_window % 2 == 0:
            raise InvariantViolation(f"SSIM window must be odd and >= 3, got {self.ssim_window}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise InvariantViolation(f"k1 and k2 must be > 0, got {(self.k1, self.k2)}")
        if self.ssim_sigma <= 0:
            raise InvariantViolation(f"ssim_sigma must be > 0, got {self.ssim_sigma}")


def _as_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"Images differ in shape: {a.shape} vs {b.shape}")
    return a, b


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _as_pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray, cfg: MetricConfig | None = None) -> float:
    cfg = cfg or MetricConfig()
    err = mse(a, b)
    if err == 0:
        return cfg.psnr_cap
    return float(10.0 * np.log10(cfg.peak**2 / err))


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian window (weights sum to 1)."""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    g /= g.sum()
    w = np.outer(g, g)
    return w / w.sum()


def ssim_map(a: np.ndarray, b: np.ndarray, cfg: MetricConfig | None = None) -> np.ndarray:
    """SSIM index of every full window of two single-channel images."""
    cfg = cfg or MetricConfig()
    a, b = _as_pair(a, b)
    if min(a.shape) < cfg.ssim_window:
        raise ImageTooSmall(f"Image {a.shape} smaller than SSIM window {cfg.ssim_window}")
    w = gaussian_window(cfg.ssim_window, cfg.ssim_sigma)
    c1 = (cfg.k1 * cfg.peak) ** 2
    c2 = (cfg.k2 * cfg.peak) ** 2

    def filt(x: np.ndarray) -> np.ndarray:
        return signal.correlate2d(x, w, mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a: np.ndarray, b: np.ndarray, cfg: MetricConfig | None = None) -> float:
    a, b = _as_pair(a, b)
    if a.ndim == 2:
        return float(ssim_map(a, b, cfg).mean())
    if a.ndim == 3:
        maps = [ssim_map(a[..., c], b[..., c], cfg).mean() for c in range(a.shape[2])]
        return float(np.mean(maps))
    raise DimensionMismatch(f"SSIM expects (H, W) or (H, W, C) images, got {a.shape}")
