from __future__ import annotations

import argparse
from pathlib import Path

from hsn.core.rawio import iter_raw_dir, read_raw
from hsn.core.types import RawFrame
from hsn.noise.model import estimate_system_gain, photon_transfer_table


def load_flats(flats_dir: str | Path) -> list[list[RawFrame]]:
    """One sub-directory of .hsrw frames per illumination level."""
    flats_dir = Path(flats_dir)
    if not flats_dir.is_dir():
        raise FileNotFoundError(f"Flats directory not found: {flats_dir}")
    levels = []
    for sub in sorted(p for p in flats_dir.iterdir() if p.is_dir()):
        frames = [read_raw(path) for path in iter_raw_dir(sub)]
        if frames:
            levels.append(frames)
    return levels


def main(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(
        prog="hsn gain", description="System gain K from flat-field bursts"
    )
    p.add_argument("--flats", type=str, required=True, help="Directory of per-level bursts")
    p.add_argument("--plot", type=str, default="", help="PNG path for the photon transfer curve")
    args = p.parse_args(argv)

    flats = load_flats(args.flats)
    table = photon_transfer_table(flats)
    K = estimate_system_gain(flats)

    print("\n===== PHOTON TRANSFER =====\n")
    print(table.to_string(index=False))
    print(f"\nSystem gain K = {K:.4f} counts per electron")
    print("\n===========================\n")

    if args.plot:
        from hsn.viz import plot_photon_transfer

        plot_photon_transfer(table, K, save_to=args.plot)
        print(f"Figure written to {args.plot}")


if __name__ == "__main__":
    main()
