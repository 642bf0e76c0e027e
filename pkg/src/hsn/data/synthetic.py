"""Synthetic desk-scale data: scenes, bias frames, flats and static bursts.

Scenes are sums of Gaussian-smoothed random fields at a few scales plus a
random colour gradient, which gives the 1/f-like spectrum of natural images
without any external dataset. Bias frames carry a pedestal, per-row offsets
(streaks) and i.i.d. read noise.
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from scipy.ndimage import gaussian_filter

from hsn.core.imageio import write_rgb8
from hsn.core.rawio import save_bias_db, write_raw, write_raw_with_sidecar
from hsn.core.rng import Rng
from hsn.core.schema import SHUTTER_SPEEDS
from hsn.core.types import BiasFrameDB, CameraProfile, RawFrame, default_profile
from hsn.isp.inverse import ReconstructionConfig, reconstruct_long_exposure
from hsn.noise.analysis import FrameStack
from hsn.noise.model import SynthesisConfig, shot_noise, synthesize_noisy

SCENE_SCALES = (1.5, 4.0, 12.0)


def natural_scene(
    height: int,
    width: int,
    rng: Rng,
    value_range: tuple[int, int] = (0, 255),
) -> np.ndarray:
    """(H, W, 3) uint8 scene with smooth multi-scale structure."""
    field = np.zeros((height, width, 3))
    for i, sigma in enumerate(SCENE_SCALES):
        noise = rng.derive("scale", i).normal((height, width, 3))
        layer = gaussian_filter(noise, sigma=(sigma, sigma, 0.0))
        field += layer / (layer.std() + 1e-12) * sigma
    yy, xx = np.mgrid[0:height, 0:width]
    direction = rng.derive("gradient").uniform(-1.0, 1.0, (2, 3))
    field += 8.0 * (yy[..., None] / height * direction[0] + xx[..., None] / width * direction[1])

    lo, hi = value_range
    field = (field - field.min()) / (field.max() - field.min() + 1e-12)
    return np.rint(lo + field * (hi - lo)).astype(np.uint8)


def natural_scenes(
    n: int, height: int, width: int, seed: int = 0, value_range: tuple[int, int] = (0, 255)
) -> list[np.ndarray]:
    base = Rng(seed, "scene")
    return [natural_scene(height, width, base.derive(i), value_range) for i in range(n)]


def clean_raw_scenes(
    n: int,
    height: int,
    width: int,
    seed: int = 0,
    profile: CameraProfile | None = None,
    shutter_s: float | None = SHUTTER_SPEEDS[0],
) -> list[RawFrame]:
    """Long-exposure raw frames reconstructed from synthetic scenes."""
    cfg = ReconstructionConfig(profile=profile or default_profile(), seed=seed)
    base = Rng(seed, "reconstruct")
    return [
        reconstruct_long_exposure(
            img, cfg, base.derive(i), source_id=f"scene_{i:04d}", shutter_s=shutter_s
        )
        for i, img in enumerate(natural_scenes(n, height, width, seed))
    ]


def striped_bias_frame(
    height: int,
    width: int,
    rng: Rng,
    black_level: int = 129,
    white_level: int = 4095,
    row_sigma: float = 2.0,
    read_sigma: float = 1.5,
    shutter_s: float | None = None,
) -> RawFrame:
    rows = row_sigma * rng.derive("rows").normal((height, 1))
    read = read_sigma * rng.derive("read").normal((height, width))
    data = np.clip(np.rint(black_level + rows + read), 0, white_level)
    return RawFrame(
        data=data.astype(np.uint16),
        black_level=black_level,
        white_level=white_level,
        shutter_s=shutter_s,
    )


def striped_bias_db(
    shutters: Sequence[float],
    frames_per_shutter: int,
    height: int,
    width: int,
    seed: int = 0,
    black_level: int = 129,
    white_level: int = 4095,
    row_sigma: float = 2.0,
    read_sigma: float = 1.5,
) -> BiasFrameDB:
    base = Rng(seed, "bias")
    entries = {
        float(s): [
            striped_bias_frame(
                height,
                width,
                base.derive(j, i),
                black_level,
                white_level,
                row_sigma,
                read_sigma,
                shutter_s=float(s),
            )
            for i in range(frames_per_shutter)
        ]
        for j, s in enumerate(shutters)
    }
    return BiasFrameDB(entries=entries, device="synthetic", notes="striped bias frames")


def flat_bursts(
    levels: Sequence[float],
    n_frames: int,
    height: int,
    width: int,
    K: float,
    seed: int = 0,
    black_level: int = 129,
    white_level: int = 4095,
    read_sigma: float = 0.0,
) -> list[list[RawFrame]]:
    """Uniformly lit bursts, one per mean signal level (black-subtracted counts)."""
    base = Rng(seed, "flat")
    bursts = []
    for li, level in enumerate(levels):
        frames = []
        for t in range(n_frames):
            rng = base.derive(li, t)
            signal = shot_noise(np.full((height, width), float(level)), K, rng.derive("shot"))
            if read_sigma > 0:
                signal = signal + read_sigma * rng.derive("read").normal((height, width))
            data = np.clip(np.rint(signal + black_level), 0, white_level)
            frames.append(
                RawFrame(data.astype(np.uint16), black_level=black_level, white_level=white_level)
            )
        bursts.append(frames)
    return bursts


def static_stack(
    clean: RawFrame,
    cfg: SynthesisConfig,
    db: BiasFrameDB | None,
    T: int,
    seed: int = 0,
) -> FrameStack:
    """T noisy captures of one static scene; frame t uses the stream (seed, t)."""
    base = Rng(seed, "stack")
    return FrameStack([synthesize_noisy(clean, cfg, db, base.derive(t)) for t in range(T)])


def write_synthetic_dataset(
    out_dir: str | Path,
    n_scenes: int = 8,
    size: int = 64,
    seed: int = 0,
    shutters: Sequence[float] = SHUTTER_SPEEDS,
    bias_per_shutter: int = 20,
    stack_frames: int = 10,
    K: float = 0.4,
    verbose: bool = True,
) -> dict[str, Any]:
    """Write scenes, clean raws, a bias database, flats and static bursts under ``out_dir``.

    Layout::

        rgb/scene_XXXX.png       clean/scene_XXXX.hsrw (+ .json sidecar)
        bias/manifest.json       flats/level_XX/frame_XXXX.hsrw
        stacks/<shutter>_<scene>/frame_XXXX.hsrw
    """
    out_dir = Path(out_dir)
    profile = default_profile(K=K)
    long_shutter = max(shutters)
    for sub in ("rgb", "clean", "flats", "stacks"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)

    scenes = natural_scenes(n_scenes, size, size, seed)
    for i, img in enumerate(scenes):
        write_rgb8(img, out_dir / "rgb" / f"scene_{i:04d}.png")
    clean = clean_raw_scenes(n_scenes, size, size, seed, profile, shutter_s=long_shutter)
    for i, frame in enumerate(clean):
        write_raw_with_sidecar(frame, out_dir / "clean" / f"scene_{i:04d}.hsrw")

    db = striped_bias_db(
        shutters, bias_per_shutter, size, size, seed, profile.black_level, profile.white_level
    )
    save_bias_db(db, out_dir / "bias")

    levels = np.geomspace(20.0, 0.6 * (profile.white_level - profile.black_level), 6)
    for li, burst in enumerate(flat_bursts(levels, stack_frames, size, size, K, seed)):
        level_dir = out_dir / "flats" / f"level_{li:02d}"
        level_dir.mkdir(exist_ok=True)
        for t, frame in enumerate(burst):
            write_raw(frame, level_dir / f"frame_{t:04d}.hsrw")

    n_stacks = 0
    for s in shutters:
        cfg = SynthesisConfig(ratio_R=long_shutter / s, K=K, seed=seed)
        for i, frame in enumerate(clean[: min(2, n_scenes)]):
            stack = static_stack(frame, cfg, db, stack_frames, seed=seed + i)
            stack_dir = out_dir / "stacks" / f"{s:g}s_scene{i:04d}"
            stack_dir.mkdir(exist_ok=True)
            for t, noisy in enumerate(stack.frames):
                write_raw(noisy, stack_dir / f"frame_{t:04d}.hsrw")
            n_stacks += 1

    if verbose:
        print("\n===== SYNTHETIC DATASET =====\n")
        print(f"Output: {out_dir.resolve()}")
        print(f"  scenes:      {n_scenes} ({size}x{size})")
        print(f"  bias frames: {bias_per_shutter} x {len(shutters)} shutter speeds")
        print(f"  flat levels: {len(levels)} x {stack_frames} frames")
        print(f"  stacks:      {n_stacks} x {stack_frames} frames")
        print("\n=============================\n")

    return {
        "out_dir": str(out_dir.resolve()),
        "n_scenes": n_scenes,
        "shutters": list(shutters),
        "n_stacks": n_stacks,
        "profile": profile.to_dict(),
    }
