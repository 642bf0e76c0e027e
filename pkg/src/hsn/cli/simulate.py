from __future__ import annotations

import argparse

from hsn.data.synthetic import write_synthetic_dataset


def main(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(
        prog="hsn simulate", description="Write a desk-scale synthetic dataset"
    )
    p.add_argument("--out", type=str, required=True, help="Output directory")
    p.add_argument("--scenes", type=int, default=8)
    p.add_argument("--size", type=int, default=64, help="Square frame side (even)")
    p.add_argument("--bias-frames", type=int, default=20, help="Bias frames per shutter speed")
    p.add_argument("--stack-frames", type=int, default=10, help="Frames per static burst")
    p.add_argument("--K", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    write_synthetic_dataset(
        args.out,
        n_scenes=args.scenes,
        size=args.size,
        seed=args.seed,
        bias_per_shutter=args.bias_frames,
        stack_frames=args.stack_frames,
        K=args.K,
        verbose=True,
    )


if __name__ == "__main__":
    main()
