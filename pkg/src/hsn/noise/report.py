from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from hsn.core.errors import EmptyInput
from hsn.core.rawio import iter_raw_dir, load_bias_db, read_raw
from hsn.core.types import BiasFrameDB
from hsn.noise.analysis import (
    DEFAULT_BINS,
    FrameStack,
    bias_energy,
    bias_level_summary,
    decompose,
    default_bin_edges,
    intensity_histogram,
    noise_energy_function,
    shutter_sweep,
)


def load_stacks(stacks_dir: str | Path) -> dict[float, list[FrameStack]]:
    """One sub-directory of .hsrw frames per static scene burst, grouped by shutter."""
    stacks_dir = Path(stacks_dir)
    if not stacks_dir.is_dir():
        raise FileNotFoundError(f"Stacks directory not found: {stacks_dir}")
    grouped: dict[float, list[FrameStack]] = defaultdict(list)
    for sub in sorted(p for p in stacks_dir.iterdir() if p.is_dir()):
        frames = [read_raw(p) for p in iter_raw_dir(sub)]
        if not frames:
            continue
        stack = FrameStack(frames)
        if stack.shutter_s is None:
            raise ValueError(f"Frames in {sub} carry no shutter speed")
        grouped[stack.shutter_s].append(stack)
    if not grouped:
        raise EmptyInput(f"No frame stacks found under {stacks_dir}")
    return dict(grouped)


def per_bin_table(result: dict[str, Any]) -> pd.DataFrame:
    curve = result["curve"]
    decomp = result["decomposition"]
    edges = curve.bin_edges
    return pd.DataFrame(
        {
            "bin_lo": edges[:-1],
            "bin_hi": edges[1:],
            "count": curve.counts,
            "energy": curve.mean_energy,
            "f_SD": decomp.f_SD,
            "f_SD_raw": decomp.f_SD_raw,
            "f_SI": decomp.f_SI,
            "p": result["histogram"].p,
        }
    )


def format_noise_text(result: dict[str, Any]) -> str:
    lines = []
    n_stacks = sum(len(v) for v in result["stacks"].values())
    lines.append(f"Stacks analysed: {n_stacks} over {len(result['stacks'])} shutter speed(s)")
    lines.append(f"Occupied bins: {int(np.sum(result['curve'].counts > 0))}")
    lines.append(f"SI energy (bias frames): {result['decomposition'].E_SI_const:.3f} counts^2")

    lines.append("\nPer shutter speed:")
    for row in result["sweep"].itertuples(index=False):
        lines.append(f"  1/{1.0 / row.shutter_s:.0f} s:")
        lines.append(f"    mean raw:   {row.mean_raw:.1f}")
        lines.append(f"    E_SD:       {row.E_SD:.3f}")
        lines.append(f"    E_SI:       {row.E_SI:.3f}")
        lines.append(f"    SI ratio:   {row.si_ratio:.4f}")

    lines.append("\nBias frames:")
    for row in result["bias_summary"].itertuples(index=False):
        lines.append(
            f"  {row.shutter_s:g} s: {row.n_frames} frames, mode {row.mode}, "
            f"std {row.std:.2f}, row/col mean var {row.row_mean_var:.2f}/{row.col_mean_var:.2f}"
        )
    return "\n".join(lines)


def analyze_stacks(
    stacks: dict[float, list[FrameStack]],
    db: BiasFrameDB,
    bins: int = DEFAULT_BINS,
) -> dict[str, Any]:
    all_stacks = [s for group in stacks.values() for s in group]
    if not all_stacks:
        raise EmptyInput("No stacks to analyse")
    ref = all_stacks[0]
    edges = default_bin_edges(ref.black_level, ref.white_level, bins)
    curve = noise_energy_function(all_stacks, edges)
    e_si = float(np.mean([bias_energy(db, s) for s in db.shutters()]))
    result: dict[str, Any] = {
        "stacks": stacks,
        "curve": curve,
        "decomposition": decompose(curve, e_si),
        "histogram": intensity_histogram(all_stacks, edges),
        "sweep": shutter_sweep(stacks, db, edges),
        "bias_summary": bias_level_summary(db),
    }
    result["text_report"] = format_noise_text(result)
    return result


def run_noise_analysis(
    stacks_dir: str | Path,
    bias_dir: str | Path,
    bins: int = DEFAULT_BINS,
    verbose: bool = True,
) -> dict[str, Any]:
    result = analyze_stacks(load_stacks(stacks_dir), load_bias_db(bias_dir), bins)
    result["stacks_dir"] = str(Path(stacks_dir).resolve())

    if verbose:
        print("\n===== NOISE ANALYSIS =====\n")
        print(result["text_report"])
        print("\n==========================\n")

    return result


def _nan_to_none(values: np.ndarray) -> list[float | None]:
    return [None if np.isnan(v) else float(v) for v in np.asarray(values, dtype=np.float64)]


def save_noise_report(
    result: dict[str, Any], out: str | Path, csv_path: str | Path | None = None
) -> Path:
    out = Path(out)
    curve = result["curve"]
    decomp = result["decomposition"]
    payload = {
        "curve": {
            "bin_edges": curve.bin_edges.tolist(),
            "mean_energy": _nan_to_none(curve.mean_energy),
            "counts": curve.counts.tolist(),
        },
        "decomposition": {
            "E_SI_const": decomp.E_SI_const,
            "f_SD": _nan_to_none(decomp.f_SD),
            "f_SD_raw": _nan_to_none(decomp.f_SD_raw),
            "f_SI": decomp.f_SI.tolist(),
        },
        "histogram": result["histogram"].p.tolist(),
        "shutters": result["sweep"].to_dict(orient="records"),
        "bias": result["bias_summary"].to_dict(orient="records"),
    }
    out.write_text(json.dumps(payload, indent=2))
    if csv_path is not None:
        per_bin_table(result).to_csv(csv_path, index=False)
    return out
