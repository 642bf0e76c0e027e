from __future__ import annotations

import argparse
import json
from pathlib import Path

from hsn.core.imageio import iter_rgb_dir, read_rgb8
from hsn.core.rawio import write_raw_with_sidecar
from hsn.core.types import CameraProfile, default_profile
from hsn.isp.inverse import ReconstructionConfig, reconstruct_batch


def load_profile(path: str) -> CameraProfile:
    if not path:
        return default_profile()
    profile_path = Path(path)
    if not profile_path.exists():
        raise FileNotFoundError(f"Camera profile not found: {profile_path}")
    return CameraProfile.from_dict(json.loads(profile_path.read_text()))


def main(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(
        prog="hsn reconstruct", description="8-bit RGB images -> long-exposure raw frames"
    )
    p.add_argument("--input", type=str, required=True, help="Directory of PNG/JPG images")
    p.add_argument("--output", type=str, required=True, help="Directory for .hsrw frames")
    p.add_argument("--profile", type=str, default="", help="Camera profile JSON")
    p.add_argument("--gamma", type=float, default=3.0, help="Gamma to undo")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-dither", action="store_true", help="Dequantize to cell centers")
    p.add_argument("--shutter", type=float, default=None, help="Shutter speed to record (s)")
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)

    cfg = ReconstructionConfig(
        gamma=args.gamma,
        profile=load_profile(args.profile),
        dither=not args.no_dither,
        seed=args.seed,
    )
    paths = iter_rgb_dir(args.input)
    images = [read_rgb8(path) for path in paths]
    frames = reconstruct_batch(
        images, cfg, [path.stem for path in paths], workers=args.workers, shutter_s=args.shutter
    )

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path, frame in zip(paths, frames, strict=True):
        write_raw_with_sidecar(frame, out_dir / f"{path.stem}.hsrw")
    print(f"Reconstructed {len(frames)} frame(s) into {out_dir}")


if __name__ == "__main__":
    main()
