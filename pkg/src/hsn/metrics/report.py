from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd

from hsn.core.errors import MissingPair
from hsn.core.imageio import iter_rgb_dir, read_rgb8
from hsn.core.rawio import iter_raw_dir, read_raw
from hsn.metrics.quality import MetricConfig, psnr, ssim

Space = Literal["raw", "rgb"]


def _pair_files(pred_dir: Path, gt_dir: Path, space: Space) -> list[tuple[Path, Path]]:
    lister = iter_raw_dir if space == "raw" else iter_rgb_dir
    pred = {p.name: p for p in lister(pred_dir)}
    gt = {p.name: p for p in lister(gt_dir)}
    for name in sorted(gt):
        if name not in pred:
            raise MissingPair(f"No prediction for ground-truth file {name} in {pred_dir}")
    for name in sorted(pred):
        if name not in gt:
            raise MissingPair(f"No ground truth for prediction file {name} in {gt_dir}")
    return [(pred[name], gt[name]) for name in sorted(gt)]


def _load_pair(pred: Path, gt: Path, space: Space, cfg: MetricConfig):
    if space == "raw":
        p, g = read_raw(pred), read_raw(gt)
        # black-subtracted counts, peak = white - black of the ground truth
        return p.signal(), g.signal(), replace(cfg, peak=float(g.dynamic_range))
    return (
        read_rgb8(pred).astype(np.float64),
        read_rgb8(gt).astype(np.float64),
        replace(cfg, peak=255.0),
    )


def compare_images(
    pred: np.ndarray, gt: np.ndarray, cfg: MetricConfig | None = None
) -> dict[str, float]:
    cfg = cfg or MetricConfig()
    return {"psnr": psnr(pred, gt, cfg), "ssim": ssim(pred, gt, cfg)}


def format_eval_text(table: pd.DataFrame, space: Space) -> str:
    lines = [f"Evaluation ({space} space), {len(table)} image pairs:"]
    for row in table.itertuples(index=False):
        lines.append(f"  {row.name}: PSNR {row.psnr:.4f} dB, SSIM {row.ssim:.4f}")
    lines.append(f"Mean PSNR: {table['psnr'].mean():.4f} dB")
    lines.append(f"Mean SSIM: {table['ssim'].mean():.4f}")
    return "\n".join(lines)


def eval_report(
    pred_dir: str | Path,
    gt_dir: str | Path,
    cfg: MetricConfig | None = None,
    space: Space = "raw",
    verbose: bool = False,
) -> dict[str, Any]:
    """Per-image and mean PSNR/SSIM over files matched by name."""
    cfg = cfg or MetricConfig()
    rows = []
    for pred, gt in _pair_files(Path(pred_dir), Path(gt_dir), space):
        p, g, pair_cfg = _load_pair(pred, gt, space, cfg)
        rows.append({"name": gt.name, **compare_images(p, g, pair_cfg)})
    table = pd.DataFrame(rows, columns=["name", "psnr", "ssim"])
    text_report = format_eval_text(table, space)

    if verbose:
        print("\n===== EVALUATION REPORT =====\n")
        print(text_report)
        print("\n=============================\n")

    return {
        "space": space,
        "table": table,
        "mean_psnr": float(table["psnr"].mean()),
        "mean_ssim": float(table["ssim"].mean()),
        "text_report": text_report,
    }


def save_eval_report(result: dict[str, Any], out: str | Path) -> tuple[Path, Path]:
    """Write ``out`` as JSON and a sibling CSV of the per-image table."""
    out = Path(out)
    table: pd.DataFrame = result["table"]
    payload = {
        "space": result["space"],
        "mean_psnr": result["mean_psnr"],
        "mean_ssim": result["mean_ssim"],
        "images": table.to_dict(orient="records"),
    }
    out.write_text(json.dumps(payload, indent=2))
    csv_path = out.with_suffix(".csv")
    table.to_csv(csv_path, index=False)
    return out, csv_path
