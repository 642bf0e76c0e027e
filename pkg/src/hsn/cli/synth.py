from __future__ import annotations

import argparse
from pathlib import Path

from hsn.core.rawio import (
    iter_raw_dir,
    load_bias_db,
    read_raw_with_sidecar,
    write_raw_with_sidecar,
)
from hsn.core.rng import Rng
from hsn.noise.model import SynthesisConfig, synthesize_noisy


def main(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(
        prog="hsn synth", description="Clean long-exposure raws -> noisy short-exposure raws"
    )
    p.add_argument(
        "--clean", "--input", dest="clean", required=True, help="Directory of clean .hsrw frames"
    )
    p.add_argument("--output", "--out", dest="output", required=True, help="Output directory")
    p.add_argument("--bias", "--bias-db", dest="bias", default="", help="Bias database directory")
    p.add_argument("--ratio", type=float, default=1.0, help="Shutter-speed ratio R")
    p.add_argument("--K", "--k", dest="K", type=float, default=0.4, help="System gain")
    p.add_argument("--shutter", type=float, default=None, help="Bias bucket shutter speed (s)")
    p.add_argument("--no-sd", action="store_true", help="Disable shot noise")
    p.add_argument("--no-si", action="store_true", help="Disable bias-frame noise")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    cfg = SynthesisConfig(
        ratio_R=args.ratio,
        K=args.K,
        enable_SD=not args.no_sd,
        enable_SI=not args.no_si,
        seed=args.seed,
        shutter_s=args.shutter,
    )
    db = load_bias_db(args.bias) if args.bias else None
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    base = Rng(cfg.seed)
    n = 0
    for i, path in enumerate(iter_raw_dir(args.clean)):
        noisy = synthesize_noisy(read_raw_with_sidecar(path), cfg, db, base.derive(i))
        write_raw_with_sidecar(noisy, out_dir / path.name)
        n += 1
    print(f"Synthesized {n} noisy frame(s) at R={cfg.ratio_R:g} into {out_dir}")


if __name__ == "__main__":
    main()
