from __future__ import annotations

import argparse
from pathlib import Path

from hsn.core.imageio import write_rgb8
from hsn.core.rawio import iter_raw_dir, read_raw_with_sidecar
from hsn.core.schema import EXPECTED_SYNTHESIS_SIDECAR_KEYS
from hsn.nn.checkpoint import checkpoint_load
from hsn.training.pipeline import denoise_pipeline


def main(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(
        prog="hsn denoise", description="Noisy raws -> denoised 8-bit RGB via both models"
    )
    p.add_argument("--noisy", type=str, required=True, help="Directory of noisy .hsrw frames")
    p.add_argument("--denoiser", type=str, required=True, help="Denoiser checkpoint")
    p.add_argument("--isp", type=str, required=True, help="Mini-ISP checkpoint")
    p.add_argument("--output", type=str, required=True, help="Directory for PNG outputs")
    p.add_argument("--ratio", type=float, default=None, help="Override the sidecar ratio R")
    args = p.parse_args(argv)

    denoiser, _, _ = checkpoint_load(args.denoiser)
    mini_isp, _, _ = checkpoint_load(args.isp)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    # without --ratio, R comes from the synthesis sidecar
    required = EXPECTED_SYNTHESIS_SIDECAR_KEYS if args.ratio is None else None
    n = 0
    for path in iter_raw_dir(args.noisy):
        noisy = read_raw_with_sidecar(path, required)
        rgb = denoise_pipeline(noisy, denoiser, mini_isp, R=args.ratio)
        write_rgb8(rgb, out_dir / f"{path.stem}.png")
        n += 1
    print(f"Wrote {n} image(s) to {out_dir}")


if __name__ == "__main__":
    main()
