from __future__ import annotations

import argparse

from hsn.metrics.quality import MetricConfig
from hsn.metrics.report import eval_report, save_eval_report


def main(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(
        prog="hsn eval", description="PSNR/SSIM of predictions against ground truth"
    )
    p.add_argument("--pred", type=str, required=True, help="Prediction directory")
    p.add_argument("--gt", type=str, required=True, help="Ground-truth directory")
    p.add_argument("--space", type=str, default="raw", choices=["raw", "rgb"])
    p.add_argument("--window", type=int, default=11, help="SSIM window size")
    p.add_argument("--out", type=str, default="", help="JSON report path (CSV written beside it)")
    args = p.parse_args(argv)

    result = eval_report(
        args.pred, args.gt, MetricConfig(ssim_window=args.window), space=args.space, verbose=True
    )
    if args.out:
        json_path, csv_path = save_eval_report(result, args.out)
        print(f"Report written to {json_path} and {csv_path}")


if __name__ == "__main__":
    main()
