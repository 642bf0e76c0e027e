"""Training loops for the raw denoiser and the Mini-ISP.

Every step draws its randomness from ``Rng(seed, "train").derive(step)``, so
a batch depends only on the run seed and the step index. Together with the
optimizer moments stored in checkpoints this makes a resumed run follow the
un-resumed trajectory exactly.
"""

from __future__ import annotations

import json
from collections import deque
from collections.abc import Callable, Iterator
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from hsn.core.errors import InvariantViolation, NonFiniteLoss
from hsn.core.rng import Rng
from hsn.core.types import RawFrame
from hsn.metrics.quality import MetricConfig, psnr
from hsn.nn.checkpoint import checkpoint_load, checkpoint_save
from hsn.nn.losses import LOSSES
from hsn.nn.models import ConvNet
from hsn.nn.optim import AdamState, CosineSchedule, adam_step, cosine_lr
from hsn.noise.model import SynthesisConfig, resolve_bias_shutter, synthesize_noisy
from hsn.training.data import (
    PairedDataset,
    apply_flips,
    pack_bayer,
    random_crop_origin,
    random_flips,
)
from hsn.training.pipeline import (
    denoise_raw,
    denoiser_input,
    frame_gains,
    gain_baseline,
    preprocess_for_isp,
    raw_psnr,
)

INPUT_SCALING = "(raw - black) / (white - black), unclamped"

Batch = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2000
    lr0: float = 2e-4
    lr_min: float = 0.0
    batch: int = 1
    crop: int | None = 64
    flips: bool = True
    seed: int = 0
    val_every: int = 200
    loss: str = "L1"
    deterministic: bool = True
    prefetch: int = 2
    checkpoint_every: int = 0

    def __post_init__(self) -> None:
        # zero steps is allowed and returns the model untouched
        if self.steps < 0:
            raise InvariantViolation(f"steps must be >= 0, got {self.steps}")
        if self.batch < 1:
            raise InvariantViolation(f"batch must be >= 1, got {self.batch}")
        if self.crop is not None and (self.crop <= 0 or self.crop % 2):
            raise InvariantViolation(f"crop must be a positive even size, got {self.crop}")
        if not 0 <= self.lr_min <= self.lr0:
            raise InvariantViolation(f"Need 0 <= lr_min <= lr0, got {self.lr_min}, {self.lr0}")
        if self.loss not in LOSSES:
            raise InvariantViolation(f"loss must be one of {sorted(LOSSES)}, got {self.loss!r}")
        if self.val_every < 1:
            raise InvariantViolation(f"val_every must be >= 1, got {self.val_every}")

    @classmethod
    def for_denoiser(cls, **overrides: Any) -> TrainConfig:
        return cls(**{"lr0": 2e-4, "loss": "L1", **overrides})

    @classmethod
    def for_mini_isp(cls, **overrides: Any) -> TrainConfig:
        return cls(**{"lr0": 1e-2, "loss": "L2", **overrides})

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TrainConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"Unknown training config keys: {unknown}")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> TrainConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_run_config(path: str | Path) -> dict[str, Any]:
    """Split a JSON run config into ``train``, ``noise`` and ``model`` parts.

    ``seed`` seeds both the training loop and the noise synthesis; a nested
    ``model`` object carries architecture options.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Run config not found: {path}")
    raw = json.loads(path.read_text())
    model = dict(raw.pop("model", {}))
    train_keys = {f.name for f in fields(TrainConfig)}
    noise_keys = {f.name for f in fields(SynthesisConfig)} - {"seed"}
    unknown = set(raw) - train_keys - noise_keys
    if unknown:
        raise ValueError(f"Unknown run config keys: {unknown}")
    train = TrainConfig.from_dict({k: v for k, v in raw.items() if k in train_keys})
    noise = {k: v for k, v in raw.items() if k in noise_keys}
    return {
        "train": train,
        "noise": SynthesisConfig.from_dict({**noise, "seed": train.seed}),
        "model": model,
    }


def step_rng(seed: int, step: int) -> Rng:
    return Rng(seed, "train").derive(step)


def _batches(
    make_batch: Callable[[int], Batch], start: int, stop: int, prefetch: int
) -> Iterator[tuple[int, Batch]]:
    """Yield (step, batch); with prefetch > 0 a worker prepares the next batches."""
    if prefetch <= 0:
        for step in range(start, stop):
            yield step, make_batch(step)
        return
    with ThreadPoolExecutor(max_workers=1) as pool:
        pending: deque[Future[Batch]] = deque()
        nxt = start
        for step in range(start, stop):
            while nxt < stop and len(pending) <= prefetch:
                pending.append(pool.submit(make_batch, nxt))
                nxt += 1
            yield step, pending.popleft().result()


def _step_checkpoint_path(path: Path, step: int) -> Path:
    return path.with_name(f"{path.stem}_step{step:06d}{path.suffix}")


def _train_loop(
    model: ConvNet,
    cfg: TrainConfig,
    make_batch: Callable[[int], Batch],
    validate: Callable[[ConvNet], float] | None,
    manifest: dict[str, Any],
    title: str,
    log_path: str | Path | None,
    checkpoint_path: str | Path | None,
    resume: str | Path | None,
    verbose: bool,
) -> dict[str, Any]:
    loss_fn = LOSSES[cfg.loss]
    params = model.parameters()
    optimizer = AdamState.zeros_like(params)
    start = 0
    if resume is not None:
        _, resumed_manifest, resumed_opt = checkpoint_load(resume, model)
        start = int(resumed_manifest.get("step", 0))
        if resumed_opt is not None:
            optimizer = resumed_opt
        if start > cfg.steps:
            raise InvariantViolation(f"Checkpoint step {start} is past the run length {cfg.steps}")

    schedule = CosineSchedule(cfg.lr0, max(cfg.steps, 1), cfg.lr_min)
    rows: list[dict[str, Any]] = []
    log_file = None
    if log_path is not None:
        log_file = Path(log_path).open("a" if resume is not None else "w")

    def save(path: Path, step: int, loss: float | None) -> None:
        checkpoint_save(
            model,
            path,
            {**manifest, "step": step, "loss": loss, "train": cfg.to_dict()},
            optimizer,
        )

    if verbose:
        print(f"\n===== {title} =====\n")
        print(f"steps {start}..{cfg.steps}, lr0={cfg.lr0:g}, loss={cfg.loss}")

    last_loss: float | None = None
    prefetch = 0 if cfg.deterministic else cfg.prefetch
    try:
        for step, (x, y) in _batches(make_batch, start, cfg.steps, prefetch):
            lr = cosine_lr(schedule, step)
            pred, cache = model.forward(x)
            loss, grad = loss_fn(pred, y)
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"Loss became {loss} at step {step} (lr={lr:.3g}); "
                    f"last finite loss {last_loss}, input range "
                    f"[{float(x.min()):.3g}, {float(x.max()):.3g}]"
                )
            grads, _ = model.backward(cache, grad)
            adam_step(params, grads, optimizer, lr)
            last_loss = loss

            done = step + 1
            val_psnr = None
            if validate is not None and (done % cfg.val_every == 0 or done == cfg.steps):
                val_psnr = validate(model)
                if verbose:
                    print(f"step {done:6d}  lr {lr:.3e}  loss {loss:.6f}  val PSNR {val_psnr:.2f}")
            row = {"step": done, "lr": lr, "loss": loss, "val_psnr": val_psnr}
            rows.append(row)
            if log_file is not None:
                log_file.write(json.dumps(row) + "\n")
            periodic = cfg.checkpoint_every and done % cfg.checkpoint_every == 0
            if checkpoint_path is not None and periodic:
                save(_step_checkpoint_path(Path(checkpoint_path), done), done, loss)
    finally:
        if log_file is not None:
            log_file.close()

    if checkpoint_path is not None:
        save(Path(checkpoint_path), max(cfg.steps, start), last_loss)

    log = pd.DataFrame(rows, columns=["step", "lr", "loss", "val_psnr"])
    final_val = validate(model) if validate is not None else None
    if verbose:
        print(f"\nfinished: {len(rows)} steps, final val PSNR {final_val}")
        print("=" * (len(title) + 12) + "\n")
    return {"model": model, "optimizer": optimizer, "log": log, "val_psnr": final_val}


def prepare_denoise_validation(
    val: PairedDataset, noise_cfg: SynthesisConfig, seed: int
) -> list[tuple[RawFrame, RawFrame]]:
    """Fixed (noisy, clean) validation pairs, synthesized once from the run seed."""
    base = Rng(seed, "val")
    out = []
    for i, pair in enumerate(val):
        clean = pair.target
        assert isinstance(clean, RawFrame)
        noisy = pair.source
        if noisy is None:
            noisy = synthesize_noisy(
                clean,
                noise_cfg,
                val.bias_db,
                base.derive(i),
                bias_crop=(0, 0, clean.width, clean.height) if noise_cfg.enable_SI else None,
            )
        out.append((noisy, clean))
    return out


def evaluate_denoiser(
    model: ConvNet, pairs: list[tuple[RawFrame, RawFrame]], R: float
) -> float:
    """Mean raw-space PSNR of denoised frames against their clean targets."""
    return float(np.mean([raw_psnr(denoise_raw(noisy, model, R), clean) for noisy, clean in pairs]))


def evaluate_gain_baseline(pairs: list[tuple[RawFrame, RawFrame]], R: float) -> float:
    return float(np.mean([raw_psnr(gain_baseline(noisy, R), clean) for noisy, clean in pairs]))


def train_denoiser(
    dataset: PairedDataset,
    noise_cfg: SynthesisConfig,
    model: ConvNet,
    cfg: TrainConfig,
    val: PairedDataset | None = None,
    log_path: str | Path | None = None,
    checkpoint_path: str | Path | None = None,
    resume: str | Path | None = None,
    verbose: bool = True,
) -> dict[str, Any]:
    """Regress clean raw crops from noisy ones synthesized on the fly.

    The network sees the packed noisy crop scaled by R and predicts the packed
    clean crop. Returns the trained model, its optimizer state, the loss log,
    and validation/baseline PSNRs when ``val`` is given.
    """
    if dataset.synthesize and noise_cfg.enable_SI and dataset.bias_db is None:
        raise InvariantViolation("SI noise enabled but the dataset has no bias frame database")
    R = noise_cfg.ratio_R
    model_dtype = model.dtype

    def make_sample(rng: Rng) -> Batch:
        pair = dataset[rng.integers(0, len(dataset))]
        clean = pair.target
        assert isinstance(clean, RawFrame)
        if cfg.crop is not None:
            x0, y0 = random_crop_origin(rng.derive("crop"), clean.height, clean.width, cfg.crop)
            window = (x0, y0, cfg.crop, cfg.crop)
        else:
            window = (0, 0, clean.width, clean.height)
        clean_c = clean.crop(*window)
        if pair.source is not None:
            noisy_c = pair.source.crop(*window)
        else:
            bias_crop = None
            if noise_cfg.enable_SI:
                db = dataset.bias_db
                bias = db.entries[resolve_bias_shutter(clean_c, noise_cfg, db)][0]
                bx, by = random_crop_origin(
                    rng.derive("bias_crop"), bias.height, bias.width, clean_c.height, clean_c.width
                )
                bias_crop = (bx, by, clean_c.width, clean_c.height)
            noisy_c = synthesize_noisy(
                clean_c, noise_cfg, dataset.bias_db, rng.derive("synth"), bias_crop=bias_crop
            )
        flips = random_flips(rng.derive("flip"), cfg.flips)
        x = apply_flips(denoiser_input(noisy_c, R), flips)
        return x, apply_flips(pack_bayer(clean_c), flips)

    def make_batch(step: int) -> Batch:
        rng = step_rng(cfg.seed, step)
        samples = [make_sample(rng.derive(b)) for b in range(cfg.batch)]
        x = np.stack([s[0] for s in samples]).astype(model_dtype)
        y = np.stack([s[1] for s in samples]).astype(model_dtype)
        return x, y

    validate: Callable[[ConvNet], float] | None = None
    val_pairs: list[tuple[RawFrame, RawFrame]] = []
    if val is not None:
        val_pairs = prepare_denoise_validation(val, noise_cfg, cfg.seed)

        def validate_denoiser(m: ConvNet) -> float:
            return evaluate_denoiser(m, val_pairs, R)

        validate = validate_denoiser

    manifest = {
        "task": "denoise",
        "seed": cfg.seed,
        "steps": cfg.steps,
        "lr0": cfg.lr0,
        "input_scaling": INPUT_SCALING,
        "input_gain": "ratio_R",
        "noise": noise_cfg.to_dict(),
    }
    result = _train_loop(
        model,
        cfg,
        make_batch,
        validate,
        manifest,
        f"TRAINING DENOISER (R={R:g})",
        log_path,
        checkpoint_path,
        resume,
        verbose,
    )
    result["baseline_psnr"] = evaluate_gain_baseline(val_pairs, R) if val_pairs else None
    return result


def isp_arrays(dataset: PairedDataset) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per pair: (3, H, W) preprocessed linear input and (3, H, W) target in [0, 1]."""
    out = []
    for pair in dataset:
        raw = pair.source
        if raw is None or isinstance(pair.target, RawFrame):
            raise InvariantViolation(f"Pair {pair.name!r} is not a raw -> RGB pair")
        linear = preprocess_for_isp(raw, frame_gains(raw))
        target = np.asarray(pair.target, dtype=np.float64) / 255.0
        out.append((linear.transpose(2, 0, 1), target.transpose(2, 0, 1)))
    return out


def evaluate_mini_isp(model: ConvNet, arrays: list[tuple[np.ndarray, np.ndarray]]) -> float:
    """Mean PSNR (peak 1) of clamped Mini-ISP outputs against their targets."""
    cfg = MetricConfig(peak=1.0)
    scores = []
    for x, y in arrays:
        pred = model(x[None].astype(model.dtype))[0].astype(np.float64)
        scores.append(psnr(np.clip(pred, 0.0, 1.0), y, cfg))
    return float(np.mean(scores))


def train_mini_isp(
    dataset: PairedDataset,
    model: ConvNet,
    cfg: TrainConfig,
    val: PairedDataset | None = None,
    log_path: str | Path | None = None,
    checkpoint_path: str | Path | None = None,
    resume: str | Path | None = None,
    verbose: bool = True,
) -> dict[str, Any]:
    """Regress 8-bit RGB targets from white-balanced, demosaicked raw frames."""
    arrays = isp_arrays(dataset)
    model_dtype = model.dtype

    def make_sample(rng: Rng) -> Batch:
        x, y = arrays[rng.integers(0, len(arrays))]
        if cfg.crop is not None:
            x0, y0 = random_crop_origin(rng.derive("crop"), x.shape[1], x.shape[2], cfg.crop)
            x = x[:, y0 : y0 + cfg.crop, x0 : x0 + cfg.crop]
            y = y[:, y0 : y0 + cfg.crop, x0 : x0 + cfg.crop]
        flips = random_flips(rng.derive("flip"), cfg.flips)
        return apply_flips(x, flips), apply_flips(y, flips)

    def make_batch(step: int) -> Batch:
        rng = step_rng(cfg.seed, step)
        samples = [make_sample(rng.derive(b)) for b in range(cfg.batch)]
        x = np.stack([s[0] for s in samples]).astype(model_dtype)
        y = np.stack([s[1] for s in samples]).astype(model_dtype)
        return x, y

    validate: Callable[[ConvNet], float] | None = None
    if val is not None:
        val_arrays = isp_arrays(val)

        def validate_isp(m: ConvNet) -> float:
            return evaluate_mini_isp(m, val_arrays)

        validate = validate_isp

    manifest = {
        "task": "mini_isp",
        "seed": cfg.seed,
        "steps": cfg.steps,
        "lr0": cfg.lr0,
        "input_scaling": INPUT_SCALING,
    }
    result = _train_loop(
        model,
        cfg,
        make_batch,
        validate,
        manifest,
        "TRAINING MINI-ISP",
        log_path,
        checkpoint_path,
        resume,
        verbose,
    )
    result["train_psnr"] = evaluate_mini_isp(model, arrays)
    return result
