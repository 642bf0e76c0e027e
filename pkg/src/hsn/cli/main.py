"""
Command-line entry point.

Usage:
    python -m hsn.cli.main <command> [options]
    hsn <command> --help
"""

from __future__ import annotations

import sys
from collections.abc import Callable

from hsn.cli import analyze, denoise, evaluate, gain, reconstruct, simulate, synth, train

COMMANDS: dict[str, tuple[Callable[[list[str] | None], None], str]] = {
    "reconstruct": (reconstruct.main, "RGB images -> long-exposure raw frames"),
    "synth": (synth.main, "clean raws -> noisy short-exposure raws"),
    "analyze": (analyze.main, "SI/SD noise energy analysis"),
    "eval": (evaluate.main, "PSNR/SSIM report"),
    "gain": (gain.main, "system gain from flat fields"),
    "train-denoise": (train.main_denoise, "train the raw denoiser"),
    "train-isp": (train.main_isp, "train the Mini-ISP"),
    "denoise": (denoise.main, "run the denoise + Mini-ISP pipeline"),
    "simulate": (simulate.main, "write a synthetic dataset"),
}


def usage() -> str:
    lines = ["usage: hsn <command> [options]", "", "commands:"]
    for name, (_, help_text) in COMMANDS.items():
        lines.append(f"  {name:<14} {help_text}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in {"-h", "--help"}:
        print(usage())
        return 0
    command, rest = argv[0], argv[1:]
    if command not in COMMANDS:
        print(f"Unknown command: {command}\n\n{usage()}", file=sys.stderr)
        return 2
    COMMANDS[command][0](rest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
