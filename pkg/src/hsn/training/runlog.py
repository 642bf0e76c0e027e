from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from hsn.core.errors import EmptyInput
from hsn.core.schema import EXPECTED_RUN_LOG_COLUMNS


def load_run_log(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Training log not found: {path}")

    rows = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
    df = pd.DataFrame(rows)
    missing = EXPECTED_RUN_LOG_COLUMNS - set(df.columns)
    if missing:
        raise ValueError(f"Missing expected columns in training log: {missing}")

    df["val_psnr"] = pd.to_numeric(df["val_psnr"], errors="coerce")
    return df.sort_values("step").reset_index(drop=True)


def loss_trend(df: pd.DataFrame, fraction: float = 0.1) -> tuple[float, float]:
    """Mean loss over the first and the last ``fraction`` of logged steps."""
    n = max(1, int(np.ceil(len(df) * fraction)))
    return float(df["loss"].iloc[:n].mean()), float(df["loss"].iloc[-n:].mean())


def summarize_run_log(df: pd.DataFrame) -> dict[str, Any]:
    if df.empty:
        raise EmptyInput("Training log has no rows")

    first, last = loss_trend(df)
    val = df.dropna(subset=["val_psnr"])
    best_val = val.loc[val["val_psnr"].idxmax()].to_dict() if not val.empty else None

    return {
        "n_steps": int(df["step"].max()),
        "first_decile_loss": first,
        "last_decile_loss": last,
        "loss_decreasing": last < first,
        "final_lr": float(df["lr"].iloc[-1]),
        "best_val": best_val,
        "final_val_psnr": float(val["val_psnr"].iloc[-1]) if not val.empty else None,
    }


def format_run_log_text(summary: dict[str, Any]) -> str:
    lines = []
    lines.append(f"Steps logged: {summary['n_steps']}")
    lines.append(f"Loss (first 10%): {summary['first_decile_loss']:.6f}")
    lines.append(f"Loss (last 10%):  {summary['last_decile_loss']:.6f}")
    verdict = "decreasing" if summary["loss_decreasing"] else "NOT decreasing"
    lines.append(f"Loss trend: {verdict}")
    lines.append(f"Final lr: {summary['final_lr']:.3e}")

    best = summary["best_val"]
    if best is None:
        lines.append("No validation PSNR recorded")
    else:
        lines.append(f"Best val PSNR: {best['val_psnr']:.2f} dB at step {int(best['step'])}")
        lines.append(f"Final val PSNR: {summary['final_val_psnr']:.2f} dB")
    return "\n".join(lines)


def run_log_report(path: str | Path, verbose: bool = True) -> dict[str, Any]:
    path = Path(path)
    df = load_run_log(path)
    summary = summarize_run_log(df)
    text_report = format_run_log_text(summary)

    if verbose:
        print("\n===== TRAINING LOG SUMMARY =====\n")
        print(text_report)
        print("\n================================\n")

    return {"log_path": str(path.resolve()), "summary": summary, "text_report": text_report}
