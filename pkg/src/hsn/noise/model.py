"""Noisy short-exposure synthesis from clean long-exposure raws.

X = (X_S / R + N_SD) + N_SI

- the black-subtracted clean signal is scaled down by the shutter ratio R;
- N_SD is photon shot noise, Poisson(signal / K) * K, applied to the scaled
  signal (fewer photons at the shorter exposure);
- N_SI is a bias frame drawn from the device database, added as
  (bias - black) so the pedestal is counted once.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, fields
from typing import Any, NamedTuple

import numpy as np
import pandas as pd

from hsn.core.errors import (
    DimensionMismatch,
    InsufficientData,
    InvariantViolation,
    NegativeSignal,
    NonPositiveSlope,
    UnknownShutter,
)
from hsn.core.rng import Rng
from hsn.core.types import BiasFrameDB, RawFrame, check_crop

# Below this mean the sampler inverts the Poisson CDF exactly; above it uses a
# rounded normal approximation. Fixed so seeded outputs stay stable.
POISSON_NORMAL_THRESHOLD = 30.0
_MAX_INVERSION_STEPS = 200


@dataclass(frozen=True)
class SynthesisConfig:
    ratio_R: float = 1.0
    K: float = 0.4
    enable_SD: bool = True
    enable_SI: bool = True
    seed: int = 0
    shutter_s: float | None = None

    def __post_init__(self) -> None:
        if self.ratio_R < 1:
            raise InvariantViolation(f"ratio_R must be >= 1, got {self.ratio_R}")
        if self.K <= 0:
            raise InvariantViolation(f"K must be > 0, got {self.K}")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SynthesisConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"Unknown synthesis config keys: {unknown}")
        return cls(**d)

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def ablation_presets(ratio_R: float, K: float, seed: int = 0) -> dict[str, SynthesisConfig]:
    """Noise-component toggles of the ablation study."""
    return {
        "si+sd": SynthesisConfig(ratio_R, K, enable_SD=True, enable_SI=True, seed=seed),
        "si": SynthesisConfig(ratio_R, K, enable_SD=False, enable_SI=True, seed=seed),
        "sd": SynthesisConfig(ratio_R, K, enable_SD=True, enable_SI=False, seed=seed),
    }


def poisson(lam: np.ndarray, rng: Rng) -> np.ndarray:
    """Poisson draws: CDF inversion for small means, rounded normal otherwise."""
    lam = np.asarray(lam, dtype=np.float64)
    out = np.zeros(lam.shape, dtype=np.float64)

    small = lam < POISSON_NORMAL_THRESHOLD
    if np.any(small):
        lam_s = lam[small]
        u = rng.random(lam_s.shape)
        k = np.zeros_like(lam_s)
        p = np.exp(-lam_s)
        cdf = p.copy()
        active = u >= cdf
        for _ in range(_MAX_INVERSION_STEPS):
            if not np.any(active):
                break
            k[active] += 1.0
            p[active] *= lam_s[active] / k[active]
            cdf[active] += p[active]
            active &= u >= cdf
        out[small] = k

    large = ~small
    if np.any(large):
        lam_l = lam[large]
        z = rng.normal(lam_l.shape)
        out[large] = np.maximum(np.rint(lam_l + np.sqrt(lam_l) * z), 0.0)
    return out


def shot_noise(signal: np.ndarray, K: float, rng: Rng) -> np.ndarray:
    """Poisson(signal / K) * K elementwise; ``signal`` in black-subtracted counts."""
    signal = np.asarray(signal, dtype=np.float64)
    if np.any(signal < 0):
        raise NegativeSignal("Shot noise needs a non-negative signal")
    if K <= 0:
        raise InvariantViolation(f"K must be > 0, got {K}")
    return poisson(signal / K, rng) * K


class BiasPatch(NamedTuple):
    data: np.ndarray
    frame_id: str
    shutter_s: float


def sample_bias(
    db: BiasFrameDB,
    shutter_s: float | None,
    crop: tuple[int, int, int, int] | None,
    rng: Rng,
) -> BiasPatch:
    """Crop (x, y, w, h) of a uniformly chosen bias frame; None crops nothing."""
    key = db.resolve_shutter(shutter_s)
    bucket = db.entries[key]
    index = rng.integers(0, len(bucket))
    frame = bucket[index]
    if crop is None:
        crop = (0, 0, frame.width, frame.height)
    check_crop(crop, frame.width, frame.height)
    x, y, w, h = crop
    return BiasPatch(frame.data[y : y + h, x : x + w], db.frame_id(key, index), key)


def resolve_bias_shutter(clean: RawFrame, cfg: SynthesisConfig, db: BiasFrameDB) -> float:
    """Bias bucket: explicit shutter, else clean shutter / R, else the only bucket."""
    if cfg.shutter_s is not None:
        return db.key_for(cfg.shutter_s)
    if clean.shutter_s:
        try:
            return db.key_for(clean.shutter_s / cfg.ratio_R)
        except UnknownShutter:
            pass
    return db.resolve_shutter(None)


def _check_bias_compatible(
    clean: RawFrame, bias: RawFrame, crop: tuple[int, int, int, int] | None
) -> None:
    if bias.black_level != clean.black_level:
        raise DimensionMismatch(
            f"Bias black level {bias.black_level} != clean black level {clean.black_level}"
        )
    if bias.pattern != clean.pattern:
        raise DimensionMismatch(f"Bias pattern {bias.pattern.name} != {clean.pattern.name}")
    if crop is None:
        if bias.shape != clean.shape:
            raise DimensionMismatch(f"Bias frame {bias.shape} != clean frame {clean.shape}")
        return
    x, y, w, h = crop
    if (h, w) != clean.shape:
        raise DimensionMismatch(f"Bias crop {crop} != clean frame {clean.shape}")
    if x % 2 or y % 2:
        raise DimensionMismatch(f"Bias crop {crop} breaks the Bayer phase")


def synthesize_noisy(
    clean: RawFrame,
    cfg: SynthesisConfig,
    db: BiasFrameDB | None,
    rng: Rng | None = None,
    bias_crop: tuple[int, int, int, int] | None = None,
) -> RawFrame:
    """Noisy short-exposure frame from a clean long-exposure one.

    ``bias_crop`` selects the bias region aligned with ``clean`` (training
    crops); without it the bias frames must have the clean frame's size.
    """
    rng = rng if rng is not None else Rng(cfg.seed)
    signal = clean.signal() / cfg.ratio_R
    if cfg.enable_SD:
        signal = shot_noise(np.maximum(signal, 0.0), cfg.K, rng.derive("sd"))

    bias_id = None
    shutter = clean.shutter_s / cfg.ratio_R if clean.shutter_s else None
    if cfg.enable_SI:
        if db is None:
            raise InvariantViolation("SI noise enabled but no bias frame database given")
        key = resolve_bias_shutter(clean, cfg, db)
        _check_bias_compatible(clean, db.entries[key][0], bias_crop)
        patch = sample_bias(db, key, bias_crop, rng.derive("si"))
        signal = signal + (patch.data.astype(np.float64) - clean.black_level)
        bias_id = patch.frame_id
        shutter = patch.shutter_s

    out = np.clip(np.rint(signal + clean.black_level), 0, clean.white_level)
    return RawFrame(
        data=out.astype(np.uint16),
        pattern=clean.pattern,
        black_level=clean.black_level,
        white_level=clean.white_level,
        shutter_s=shutter,
        meta={
            **clean.meta,
            "ratio_R": cfg.ratio_R,
            "K": cfg.K,
            "enable_SD": cfg.enable_SD,
            "enable_SI": cfg.enable_SI,
            "bias_frame_id": bias_id,
            "seed": rng.seed,
            "stream": list(rng.keys),
        },
    )


def photon_transfer_table(flats: Sequence[Sequence[RawFrame]]) -> pd.DataFrame:
    """Per illumination level: mean signal, mean temporal variance, frame count.

    Means and variances are black-subtracted; temporal variance uses the
    unbiased (T - 1) normalizer.
    """
    rows = []
    for level, frames in enumerate(flats):
        if len(frames) < 2:
            raise InsufficientData(f"Level {level} has {len(frames)} frame(s), need >= 2")
        ref = frames[0].geometry()
        if any(f.geometry() != ref for f in frames):
            raise DimensionMismatch(f"Flat frames at level {level} differ in geometry")
        stack = np.stack([f.signal() for f in frames])
        rows.append(
            {
                "level": level,
                "mean": float(stack.mean(axis=0).mean()),
                "variance": float(stack.var(axis=0, ddof=1).mean()),
                "n_frames": len(frames),
            }
        )
    return pd.DataFrame(rows, columns=["level", "mean", "variance", "n_frames"])


def estimate_system_gain(flats: Sequence[Sequence[RawFrame]]) -> float:
    """Slope K of variance = K * mean, least squares through the origin.

    ``flats`` holds one burst of frames per illumination level.
    """
    if len(flats) < 2:
        raise InsufficientData(f"Need >= 2 illumination levels, got {len(flats)}")
    table = photon_transfer_table(flats)
    if table["mean"].round(6).nunique() < 2:
        raise InsufficientData("Illumination levels are not distinct")
    mu = table["mean"].to_numpy()[:, None]
    var = table["variance"].to_numpy()
    slope = float(np.linalg.lstsq(mu, var, rcond=None)[0][0])
    if not slope > 0:
        raise NonPositiveSlope(f"Photon transfer slope {slope} is not positive")
    return slope
