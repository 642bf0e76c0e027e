"""8-bit RGB image files (PNG/JPG) through matplotlib's image module."""

from __future__ import annotations

from pathlib import Path

import matplotlib.image as mpimg
import numpy as np

from hsn.core.errors import InvariantViolation

RGB_SUFFIXES = (".png", ".jpg", ".jpeg")


def check_rgb8(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvariantViolation(f"RGB image must be (H, W, 3), got {img.shape}")
    if img.dtype != np.uint8:
        raise InvariantViolation(f"RGB image must be uint8, got {img.dtype}")
    return img


def read_rgb8(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Image not found: {path}")
    img = mpimg.imread(path)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    img = img[:, :, :3]
    if img.dtype != np.uint8:
        # PNGs come back as floats in [0, 1]
        img = np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255)
    return np.ascontiguousarray(img.astype(np.uint8))


def write_rgb8(img: np.ndarray, path: str | Path) -> None:
    path = Path(path)
    img = check_rgb8(img)
    mpimg.imsave(path, img, format=path.suffix.lstrip(".").lower() or "png")


def iter_rgb_dir(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in RGB_SUFFIXES)
