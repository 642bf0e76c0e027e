"""``train-denoise`` and ``train-isp`` entry points."""

from __future__ import annotations

import argparse
from pathlib import Path
from typing import Any

from hsn.core.imageio import read_rgb8
from hsn.core.rawio import iter_raw_dir, load_bias_db, read_raw_with_sidecar
from hsn.core.schema import EXPECTED_RECONSTRUCTION_SIDECAR_KEYS
from hsn.nn.models import MiniIspModel, TinyDenoiser
from hsn.training.data import PairedDataset, split_dataset
from hsn.training.loops import load_run_config, train_denoiser, train_mini_isp
from hsn.training.runlog import format_run_log_text, summarize_run_log


def _common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, required=True, help="JSON run config")
    p.add_argument("--out", type=str, required=True, help="Checkpoint path")
    p.add_argument("--log", type=str, default="", help="JSONL log path (default: beside --out)")
    p.add_argument("--resume", type=str, default="", help="Checkpoint to resume from")
    p.add_argument("--val-fraction", type=float, default=0.15)
    p.add_argument("--plot", type=str, default="", help="PNG path for the loss curve")
    p.add_argument("--quiet", action="store_true")


def _log_path(args: argparse.Namespace) -> Path:
    return Path(args.log) if args.log else Path(args.out).with_suffix(".jsonl")


def _report(result: dict[str, Any], args: argparse.Namespace) -> None:
    print(format_run_log_text(summarize_run_log(result["log"])))
    if args.plot:
        from hsn.viz import plot_loss

        plot_loss(result["log"], save_to=args.plot)
        print(f"Figure written to {args.plot}")


def main_denoise(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(
        prog="hsn train-denoise", description="Train the raw denoiser for one ratio R"
    )
    _common_args(p)
    p.add_argument("--clean", type=str, required=True, help="Directory of clean .hsrw frames")
    p.add_argument("--bias", type=str, default="", help="Bias frame database directory")
    args = p.parse_args(argv)

    run = load_run_config(args.config)
    cfg, noise_cfg = run["train"], run["noise"]
    clean = [read_raw_with_sidecar(path) for path in iter_raw_dir(args.clean)]
    db = load_bias_db(args.bias) if args.bias else None
    train, val = split_dataset(PairedDataset.for_denoising(clean, db), args.val_fraction, cfg.seed)

    model = TinyDenoiser(seed=cfg.seed, **run["model"])
    result = train_denoiser(
        train,
        noise_cfg,
        model,
        cfg,
        val=val,
        log_path=_log_path(args),
        checkpoint_path=args.out,
        resume=args.resume or None,
        verbose=not args.quiet,
    )
    _report(result, args)
    if result["baseline_psnr"] is not None:
        print(f"Gain baseline val PSNR: {result['baseline_psnr']:.2f} dB")
    print(f"Checkpoint written to {args.out}")


def main_isp(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(
        prog="hsn train-isp", description="Train the Mini-ISP on raw -> RGB pairs"
    )
    _common_args(p)
    p.add_argument("--raw", type=str, required=True, help="Directory of .hsrw frames")
    p.add_argument("--rgb", type=str, required=True, help="Directory of matching PNG targets")
    args = p.parse_args(argv)

    run = load_run_config(args.config)
    cfg = run["train"]
    rgb_dir = Path(args.rgb)
    raws, rgbs = [], []
    for path in iter_raw_dir(args.raw):
        target = rgb_dir / f"{path.stem}.png"
        if not target.exists():
            raise FileNotFoundError(f"No RGB target for {path.name} in {rgb_dir}")
        raws.append(read_raw_with_sidecar(path, EXPECTED_RECONSTRUCTION_SIDECAR_KEYS))
        rgbs.append(read_rgb8(target))
    train, val = split_dataset(PairedDataset.for_isp(raws, rgbs), args.val_fraction, cfg.seed)

    model = MiniIspModel(seed=cfg.seed, **run["model"])
    result = train_mini_isp(
        train,
        model,
        cfg,
        val=val,
        log_path=_log_path(args),
        checkpoint_path=args.out,
        resume=args.resume or None,
        verbose=not args.quiet,
    )
    _report(result, args)
    print(f"Train PSNR: {result['train_psnr']:.2f} dB")
    print(f"Checkpoint written to {args.out}")


if __name__ == "__main__":
    main_denoise()
