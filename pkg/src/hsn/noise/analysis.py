"""Temporal noise statistics and signal-dependent / signal-independent decomposition.

For a burst X_t (t = 1..T) at each pixel:

    mean  X̄ = 1/T Σ_t X_t
    energy E = 1/T Σ_t (X_t - X̄)²

E as a function of X̄, pooled over static scenes, gives the noise energy
curve f. The signal-independent part is the constant energy of the bias
frames; the signal-dependent part is what remains. Weighting both by the
raw-value distribution of one shutter speed gives that speed's expected
energies and the SI ratio E_SI / (E_SD + E_SI).

Statistics are computed on raw counts including the pedestal and pool all
Bayer phases.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

from hsn.core.errors import (
    BinMismatch,
    DimensionMismatch,
    EmptyInput,
    TooFewFrames,
    ZeroTotalEnergy,
)
from hsn.core.types import BiasFrameDB, RawFrame
from hsn.metrics.quality import MetricConfig, psnr

DEFAULT_BINS = 64


@dataclass(frozen=True, eq=False)
class FrameStack:
    """T >= 2 frames of one static scene at one shutter speed."""

    frames: tuple[RawFrame, ...]

    def __init__(self, frames: Sequence[RawFrame]) -> None:
        frames = tuple(frames)
        if len(frames) < 2:
            raise TooFewFrames(f"A frame stack needs >= 2 frames, got {len(frames)}")
        ref = frames[0]
        for f in frames[1:]:
            if f.geometry() != ref.geometry() or f.shutter_s != ref.shutter_s:
                raise DimensionMismatch("Frames in a stack must share geometry and shutter speed")
        object.__setattr__(self, "frames", frames)

    @property
    def T(self) -> int:
        return len(self.frames)

    @property
    def shutter_s(self) -> float | None:
        return self.frames[0].shutter_s

    @property
    def black_level(self) -> int:
        return self.frames[0].black_level

    @property
    def white_level(self) -> int:
        return self.frames[0].white_level

    def array(self) -> np.ndarray:
        return np.stack([f.data.astype(np.float64) for f in self.frames])


@dataclass(frozen=True, eq=False)
class NoiseEnergyCurve:
    """Per-bin mean noise energy; empty bins hold NaN and a zero count."""

    bin_edges: np.ndarray
    mean_energy: np.ndarray
    counts: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def occupied(self) -> np.ndarray:
        return self.counts > 0


@dataclass(frozen=True, eq=False)
class EnergyDecomposition:
    E_SI_const: float
    f_SD: np.ndarray
    f_SI: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    # f - E_SI before flooring at zero
    f_SD_raw: np.ndarray


@dataclass(frozen=True, eq=False)
class IntensityDistribution:
    bin_edges: np.ndarray
    p: np.ndarray


def temporal_stats(stack: FrameStack) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel temporal mean and population-normalized energy (1/T)."""
    if stack.T < 2:
        raise TooFewFrames(f"Need >= 2 frames, got {stack.T}")
    x = stack.array()
    mean = x.mean(axis=0)
    energy = ((x - mean) ** 2).mean(axis=0)
    return mean, energy


def default_bin_edges(black_level: int, white_level: int, bins: int = DEFAULT_BINS) -> np.ndarray:
    return np.linspace(float(black_level), float(white_level), bins + 1)


def _resolve_edges(stacks: Sequence[FrameStack], bins: int | np.ndarray | None) -> np.ndarray:
    if bins is None:
        bins = DEFAULT_BINS
    if np.isscalar(bins):
        return default_bin_edges(stacks[0].black_level, stacks[0].white_level, int(bins))
    edges = np.asarray(bins, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("Bin edges must be a strictly increasing 1-D array")
    return edges


def _bin_index(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Bin of each value, -1 outside [edges[0], edges[-1]]; the last bin is closed."""
    idx = np.searchsorted(edges, values, side="right") - 1
    idx[values == edges[-1]] = edges.size - 2
    idx[(values < edges[0]) | (values > edges[-1])] = -1
    return idx


def _pooled_stats(stacks: Sequence[FrameStack]) -> tuple[np.ndarray, np.ndarray]:
    means, energies = [], []
    for stack in stacks:
        m, e = temporal_stats(stack)
        means.append(m.ravel())
        energies.append(e.ravel())
    return np.concatenate(means), np.concatenate(energies)


def _binned_sums(idx: np.ndarray, values: np.ndarray, n_bins: int) -> np.ndarray:
    # Sort first so the accumulation order, and therefore the rounding, does not
    # depend on the order the pixels were pooled in.
    keep = idx >= 0
    idx, values = idx[keep], values[keep]
    order = np.lexsort((values, idx))
    return np.bincount(idx[order], weights=values[order], minlength=n_bins)


def noise_energy_function(
    stacks: Sequence[FrameStack], bins: int | np.ndarray | None = None
) -> NoiseEnergyCurve:
    if not stacks:
        raise EmptyInput("noise_energy_function needs at least one stack")
    edges = _resolve_edges(stacks, bins)
    xbar, energy = _pooled_stats(stacks)
    n_bins = edges.size - 1
    idx = _bin_index(xbar, edges)
    counts = np.bincount(idx[idx >= 0], minlength=n_bins)
    sums = _binned_sums(idx, energy, n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_energy = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return NoiseEnergyCurve(bin_edges=edges, mean_energy=mean_energy, counts=counts)


def bias_energy(db: BiasFrameDB, shutter_s: float) -> float:
    """Spatial mean of the temporal energy map of one bias bucket."""
    bucket = db.bucket(shutter_s)
    if len(bucket) < 2:
        raise TooFewFrames(f"Bias bucket for {shutter_s}s has {len(bucket)} frame(s), need >= 2")
    _, energy = temporal_stats(FrameStack(bucket))
    return float(energy.mean())


def decompose(curve: NoiseEnergyCurve, E_SI_const: float) -> EnergyDecomposition:
    f_SI = np.full(curve.mean_energy.shape, float(E_SI_const))
    raw = curve.mean_energy - f_SI
    with np.errstate(invalid="ignore"):
        f_SD = np.where(np.isnan(raw), np.nan, np.maximum(raw, 0.0))
    return EnergyDecomposition(
        E_SI_const=float(E_SI_const),
        f_SD=f_SD,
        f_SI=f_SI,
        bin_edges=curve.bin_edges,
        counts=curve.counts,
        f_SD_raw=raw,
    )


def intensity_histogram(
    stacks: Sequence[FrameStack], bins: int | np.ndarray | None = None
) -> IntensityDistribution:
    """Normalized histogram p_S of temporal-mean raw values."""
    if not stacks:
        raise EmptyInput("intensity_histogram needs at least one stack")
    edges = _resolve_edges(stacks, bins)
    xbar = np.concatenate([temporal_stats(s)[0].ravel() for s in stacks])
    idx = _bin_index(xbar, edges)
    counts = np.bincount(idx[idx >= 0], minlength=edges.size - 1).astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise EmptyInput("No raw values fall inside the histogram range")
    return IntensityDistribution(bin_edges=edges, p=counts / total)


def expected_energies(
    p: IntensityDistribution, decomp: EnergyDecomposition
) -> tuple[float, float]:
    """(E_SD(s), E_SI(s)) = Σ p(bin) f_SD(bin), Σ p(bin) f_SI(bin)."""
    if p.bin_edges.shape != decomp.bin_edges.shape or not np.allclose(
        p.bin_edges, decomp.bin_edges, rtol=0, atol=1e-9
    ):
        raise BinMismatch("Distribution and decomposition use different bins")
    use = (p.p > 0) & (decomp.counts > 0)
    e_sd = float(np.sum(p.p[use] * decomp.f_SD[use]))
    e_si = float(np.sum(p.p[use] * decomp.f_SI[use]))
    return e_sd, e_si


def si_ratio(E_SD_s: float, E_SI_s: float) -> float:
    total = E_SD_s + E_SI_s
    if not total > 0:
        raise ZeroTotalEnergy(f"Total noise energy {total} is not positive")
    return E_SI_s / total


def shutter_sweep(
    stacks_by_shutter: Mapping[float, Sequence[FrameStack]],
    db: BiasFrameDB,
    bins: int | np.ndarray | None = None,
) -> pd.DataFrame:
    """Expected SD/SI energies and SI ratio per shutter speed.

    The energy curve is pooled over every shutter speed; each speed then
    weights it with its own raw-value distribution. The SI constant comes from
    the bias bucket of the same speed, or the mean over all buckets when the
    database has none for it.
    """
    all_stacks = [s for stacks in stacks_by_shutter.values() for s in stacks]
    if not all_stacks:
        raise EmptyInput("shutter_sweep needs at least one stack")
    edges = _resolve_edges(all_stacks, bins)
    curve = noise_energy_function(all_stacks, edges)
    pooled_si = float(np.mean([bias_energy(db, s) for s in db.shutters()]))

    rows = []
    for shutter, stacks in sorted(stacks_by_shutter.items(), reverse=True):
        try:
            e_si_const = bias_energy(db, shutter)
        except KeyError:
            e_si_const = pooled_si
        decomp = decompose(curve, e_si_const)
        p = intensity_histogram(stacks, edges)
        e_sd, e_si = expected_energies(p, decomp)
        rows.append(
            {
                "shutter_s": shutter,
                "E_SD": e_sd,
                "E_SI": e_si,
                "E_total": e_sd + e_si,
                "si_ratio": si_ratio(e_sd, e_si),
                "mean_raw": float(np.sum(p.p * 0.5 * (edges[:-1] + edges[1:]))),
            }
        )
    return pd.DataFrame(rows)


def shutter_psnr_table(
    stacks_by_shutter: Mapping[float, Sequence[FrameStack]],
    reference: RawFrame,
) -> pd.DataFrame:
    """Mean raw-space PSNR of each shutter's frames against a long-exposure reference.

    Frames are gain-compensated by the exposure ratio (reference shutter over
    frame shutter) before comparison.
    """
    if reference.shutter_s is None:
        raise ValueError("The reference frame needs a shutter speed")
    peak = float(reference.dynamic_range)
    cfg = MetricConfig(peak=peak)
    ref = reference.signal()
    rows = []
    for shutter, stacks in sorted(stacks_by_shutter.items(), reverse=True):
        ratio = reference.shutter_s / shutter
        values = [
            psnr(np.clip(f.signal() * ratio, 0.0, peak), ref, cfg)
            for s in stacks
            for f in s.frames
        ]
        rows.append({"shutter_s": shutter, "ratio": ratio, "psnr": float(np.mean(values))})
    return pd.DataFrame(rows)


def residual_histogram(
    noisy: RawFrame, clean: RawFrame, ratio_R: float, edges: np.ndarray
) -> np.ndarray:
    """Normalized histogram of noisy - clean/R residuals (black-subtracted counts)."""
    if noisy.shape != clean.shape:
        raise DimensionMismatch(f"Frames differ in shape: {noisy.shape} vs {clean.shape}")
    residual = noisy.signal() - clean.signal() / ratio_R
    counts, _ = np.histogram(residual, bins=edges)
    total = counts.sum()
    if total == 0:
        raise EmptyInput("No residuals fall inside the histogram range")
    return counts / total


def histogram_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total-variation distance between two normalized histograms."""
    p, q = np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise BinMismatch(f"Histograms differ in shape: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def bias_level_summary(db: BiasFrameDB) -> pd.DataFrame:
    """Pedestal statistics per shutter speed, with row/column streak measures."""
    rows = []
    for shutter in db.shutters():
        stack = np.stack([f.data.astype(np.float64) for f in db.bucket(shutter)])
        values, counts = np.unique(stack.astype(np.int64), return_counts=True)
        row_means = stack.mean(axis=2)
        col_means = stack.mean(axis=1)
        rows.append(
            {
                "shutter_s": shutter,
                "n_frames": stack.shape[0],
                "mode": int(values[np.argmax(counts)]),
                "mean": float(stack.mean()),
                "std": float(stack.std()),
                "row_mean_var": float(row_means.var(axis=1).mean()),
                "col_mean_var": float(col_means.var(axis=1).mean()),
            }
        )
    return pd.DataFrame(rows)


def streak_ratio(frame: RawFrame) -> float:
    """Variance of row means over variance of column means."""
    x = frame.data.astype(np.float64)
    col_var = x.mean(axis=0).var()
    return float(x.mean(axis=1).var() / col_var) if col_var > 0 else float("inf")
