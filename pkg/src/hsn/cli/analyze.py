from __future__ import annotations

import argparse
from pathlib import Path

from hsn.noise.analysis import DEFAULT_BINS
from hsn.noise.report import run_noise_analysis, save_noise_report


def main(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(
        prog="hsn analyze", description="SI/SD noise energy analysis of static-scene bursts"
    )
    p.add_argument("--stacks", type=str, required=True, help="Directory of burst sub-directories")
    p.add_argument("--bias", type=str, required=True, help="Bias frame database directory")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--out", type=str, default="", help="JSON report path")
    p.add_argument("--csv", type=str, default="", help="Per-bin CSV path")
    p.add_argument("--plots", type=str, default="", help="Directory for PNG figures")
    args = p.parse_args(argv)

    result = run_noise_analysis(args.stacks, args.bias, bins=args.bins, verbose=True)
    if args.out:
        save_noise_report(result, args.out, args.csv or None)
        print(f"Report written to {args.out}")
    if args.plots:
        from hsn.viz import plot_noise_energy, plot_si_ratio

        plot_dir = Path(args.plots)
        plot_dir.mkdir(parents=True, exist_ok=True)
        plot_noise_energy(
            result["curve"], result["decomposition"], save_to=plot_dir / "noise_energy.png"
        )
        plot_si_ratio(result["sweep"], save_to=plot_dir / "si_ratio.png")
        print(f"Figures written to {plot_dir}")


if __name__ == "__main__":
    main()
