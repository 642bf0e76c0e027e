"""
Plots for noise analysis and training runs.

Plain matplotlib functions; each returns the Figure and saves it when a path
is given.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from hsn.noise.analysis import EnergyDecomposition, NoiseEnergyCurve


def _finish(fig: Figure, save_to: str | Path | None, show: bool) -> Figure:
    fig.tight_layout()
    if save_to is not None:
        fig.savefig(save_to, dpi=120)
    if show:
        plt.show()
    return fig


def plot_noise_energy(
    curve: NoiseEnergyCurve,
    decomposition: EnergyDecomposition | None = None,
    title: str = "Noise energy vs raw intensity",
    save_to: str | Path | None = None,
    show: bool = False,
) -> Figure:
    """
    Mean temporal variance per intensity bin, with the SI / SD split when given.
    """
    occupied = curve.occupied
    centers = curve.centers[occupied]

    fig, ax = plt.subplots()
    ax.plot(centers, curve.mean_energy[occupied], marker="o", label="f (total)")
    if decomposition is not None:
        ax.plot(centers, decomposition.f_SD[occupied], linestyle="--", label="f_SD")
        ax.axhline(decomposition.E_SI_const, color="gray", linestyle=":", label="E_SI")
    ax.set_xlabel("Raw intensity (counts)")
    ax.set_ylabel("Noise energy (counts^2)")
    ax.set_title(title)
    ax.legend()
    ax.grid(True)
    return _finish(fig, save_to, show)


def plot_si_ratio(
    sweep: pd.DataFrame,
    title: str = "SI share of noise energy by shutter speed",
    save_to: str | Path | None = None,
    show: bool = False,
) -> Figure:
    """
    Two panels from a shutter sweep: average energies and the SI ratio.
    """
    sweep = sweep.sort_values("shutter_s")
    labels = [f"1/{1 / s:.0f}" for s in sweep["shutter_s"]]
    x = np.arange(len(labels))

    fig, (ax_e, ax_r) = plt.subplots(1, 2, figsize=(10, 4))
    ax_e.bar(x - 0.2, sweep["E_SD"], width=0.4, label="E_SD")
    ax_e.bar(x + 0.2, sweep["E_SI"], width=0.4, label="E_SI")
    ax_e.set_xticks(x, labels)
    ax_e.set_xlabel("Shutter speed (s)")
    ax_e.set_ylabel("Average noise energy")
    ax_e.legend()

    ax_r.plot(x, sweep["si_ratio"], marker="o")
    ax_r.set_xticks(x, labels)
    ax_r.set_ylim(0, 1)
    ax_r.set_xlabel("Shutter speed (s)")
    ax_r.set_ylabel("E_SI / (E_SI + E_SD)")
    ax_r.grid(True)
    fig.suptitle(title)
    return _finish(fig, save_to, show)


def plot_photon_transfer(
    table: pd.DataFrame,
    K: float | None = None,
    title: str = "Photon transfer curve",
    save_to: str | Path | None = None,
    show: bool = False,
) -> Figure:
    fig, ax = plt.subplots()
    ax.scatter(table["mean"], table["variance"], label="flat levels")
    if K is not None:
        mu = np.linspace(0, float(table["mean"].max()), 50)
        ax.plot(mu, K * mu, linestyle="--", label=f"K = {K:.3f}")
    ax.set_xlabel("Mean signal (counts)")
    ax.set_ylabel("Temporal variance (counts^2)")
    ax.set_title(title)
    ax.legend()
    ax.grid(True)
    return _finish(fig, save_to, show)


def plot_loss(
    log: pd.DataFrame,
    title: str = "Training loss",
    save_to: str | Path | None = None,
    show: bool = False,
) -> Figure:
    fig, ax = plt.subplots()
    ax.plot(log["step"], log["loss"], linewidth=0.8, label="loss")
    ax.set_xlabel("Step")
    ax.set_ylabel("Loss")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.grid(True)

    val = log.dropna(subset=["val_psnr"])
    if not val.empty:
        ax_psnr = ax.twinx()
        ax_psnr.plot(val["step"], val["val_psnr"], color="tab:orange", marker="o", label="val PSNR")
        ax_psnr.set_ylabel("Validation PSNR (dB)")
    return _finish(fig, save_to, show)
