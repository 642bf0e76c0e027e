import json

import numpy as np
import pandas as pd
import pytest

from hsn.core.errors import DimensionMismatch, EmptyInput, InvariantViolation
from hsn.core.rng import Rng
from hsn.core.types import BayerPattern, RawFrame, default_profile
from hsn.data.synthetic import clean_raw_scenes, natural_scenes, striped_bias_db
from hsn.isp.forward import WbGains, demosaic_bilinear, forward_isp
from hsn.isp.inverse import ReconstructionConfig, profile_with_gamma, reconstruct_long_exposure
from hsn.metrics.quality import MetricConfig, psnr
from hsn.nn.losses import l1_loss
from hsn.nn.models import MiniIspModel, TinyDenoiser
from hsn.noise.model import SynthesisConfig, synthesize_noisy
from hsn.training.data import (
    PairedDataset,
    apply_flips,
    pack_bayer,
    random_crop_origin,
    split_dataset,
    unpack_bayer,
)
from hsn.training.loops import TrainConfig, load_run_config, train_denoiser, train_mini_isp
from hsn.training.pipeline import denoise_pipeline, frame_gains, gain_baseline, preprocess_for_isp
from hsn.training.runlog import loss_trend, run_log_report


def _frame(data, black=129):
    return RawFrame(np.asarray(data, dtype=np.uint16), BayerPattern.RGGB, black, 4095)


@pytest.fixture
def clean_frames():
    return clean_raw_scenes(3, 32, 32, seed=0)


def _denoise_run(clean, cfg, **kwargs):
    noise = SynthesisConfig(ratio_R=10, K=0.4, enable_SI=False, seed=cfg.seed)
    model = TinyDenoiser(depth=3, width=4, seed=0, zero_last=False)
    return train_denoiser(
        PairedDataset.for_denoising(clean), noise, model, cfg, verbose=False, **kwargs
    )


def test_pack_unpack_round_trip():
    data = Rng(0).integers(0, 4096, (8, 12))
    frame = _frame(data)
    packed = pack_bayer(frame)
    assert packed.shape == (4, 4, 6)
    assert np.array_equal(unpack_bayer(packed, frame).data, frame.data)


def test_pack_constant_frame():
    packed = pack_bayer(_frame(np.full((4, 4), 129 + 3966 // 2)))
    assert np.allclose(packed, (3966 // 2) / 3966)


def test_pack_channel_order():
    frame = RawFrame(np.arange(16).reshape(4, 4), BayerPattern.RGGB, 0, 4095)
    counts = np.rint(pack_bayer(frame) * 4095).astype(int)
    assert counts[0].tolist() == [[0, 2], [8, 10]]
    assert counts[1].tolist() == [[1, 3], [9, 11]]
    assert counts[2].tolist() == [[4, 6], [12, 14]]
    assert counts[3].tolist() == [[5, 7], [13, 15]]


def test_pack_keeps_sub_pedestal_values():
    packed = pack_bayer(_frame(np.full((2, 2), 100)))
    assert np.all(packed < 0)


def test_unpack_rejects_bad_shapes():
    frame = _frame(np.zeros((4, 4)))
    with pytest.raises(DimensionMismatch):
        unpack_bayer(np.zeros((3, 2, 2)), frame)
    with pytest.raises(DimensionMismatch):
        unpack_bayer(np.zeros((4, 3, 3)), frame)


def test_flips_and_crop_origin():
    x = np.arange(8).reshape(1, 2, 4)
    assert apply_flips(x, (True, False))[0, 0].tolist() == [3, 2, 1, 0]
    assert apply_flips(x, (False, True))[0, 0].tolist() == [4, 5, 6, 7]
    for i in range(50):
        cx, cy = random_crop_origin(Rng(1, i), 32, 48, 16)
        assert cx % 2 == 0 and cy % 2 == 0
        assert 0 <= cx <= 32 and 0 <= cy <= 16


def test_preprocess_for_isp():
    assert not preprocess_for_isp(_frame(np.full((4, 4), 129)), WbGains()).any()
    frame = _frame(Rng(2).integers(129, 4096, (8, 8)))
    plain = demosaic_bilinear(frame)
    assert np.array_equal(preprocess_for_isp(frame, WbGains()), plain)
    red = preprocess_for_isp(frame, WbGains(2.0, 1.0))
    assert np.allclose(red[..., 0], 2.0 * plain[..., 0])
    assert np.array_equal(red[..., 1], plain[..., 1])


def test_gain_baseline():
    frame = _frame(Rng(3).integers(0, 4096, (4, 4)))
    assert np.array_equal(gain_baseline(frame, 1).data, frame.data)
    out = gain_baseline(_frame(np.full((4, 4), 229)), 10)
    assert np.all(out.data == 1129)
    assert out.meta["baseline_gain"] == 10
    with pytest.raises(InvariantViolation):
        gain_baseline(frame, 0.5)


def test_split_dataset(clean_frames):
    frames = clean_raw_scenes(20, 8, 8, seed=1)
    ds = PairedDataset.for_denoising(frames)
    train, val = split_dataset(ds, 0.15, seed=4)
    assert len(train) == 17 and len(val) == 3
    names = {p.name for p in train} | {p.name for p in val}
    assert len(names) == 20
    again, _ = split_dataset(ds, 0.15, seed=4)
    assert [p.name for p in again] == [p.name for p in train]

    single, none = split_dataset(PairedDataset.for_denoising(clean_frames[:1]), 0.5)
    assert len(single) == 1 and none is None


def test_dataset_invariants(clean_frames):
    with pytest.raises(EmptyInput):
        PairedDataset([])
    rgbs = natural_scenes(2, 32, 32, seed=0)
    with pytest.raises(DimensionMismatch):
        PairedDataset.for_isp(clean_frames, rgbs)


def test_train_config_validation(tmp_path):
    with pytest.raises(InvariantViolation):
        TrainConfig(steps=-1)
    with pytest.raises(InvariantViolation):
        TrainConfig(crop=15)
    with pytest.raises(InvariantViolation):
        TrainConfig(loss="L3")
    with pytest.raises(ValueError, match="Unknown training config keys"):
        TrainConfig.from_dict({"epochs": 3})

    isp = TrainConfig.for_mini_isp(steps=10)
    assert (isp.lr0, isp.loss, isp.steps) == (1e-2, "L2", 10)
    path = tmp_path / "train.json"
    path.write_text(json.dumps(isp.to_dict()))
    assert TrainConfig.from_json(path) == isp


def test_load_run_config(tmp_path):
    path = tmp_path / "run.json"
    config = {"steps": 5, "seed": 3, "ratio_R": 8, "K": 0.4, "model": {"width": 8}}
    path.write_text(json.dumps(config))
    run = load_run_config(path)
    assert run["train"].steps == 5
    assert run["noise"].ratio_R == 8 and run["noise"].seed == 3
    assert run["model"] == {"width": 8}

    path.write_text(json.dumps({"steps": 5, "gamma": 2.2}))
    with pytest.raises(ValueError, match="Unknown run config keys"):
        load_run_config(path)
    with pytest.raises(FileNotFoundError):
        load_run_config(tmp_path / "missing.json")


def test_identity_noise_keeps_identity_denoiser(clean_frames):
    noise = SynthesisConfig(ratio_R=1, enable_SD=False, enable_SI=False)
    cfg = TrainConfig(steps=5, crop=16, lr0=1e-3)
    result = train_denoiser(
        PairedDataset.for_denoising(clean_frames),
        noise,
        TinyDenoiser(depth=3, width=4),
        cfg,
        verbose=False,
    )
    assert result["log"]["loss"].max() < 1e-3


def test_denoiser_training_is_deterministic(clean_frames):
    cfg = TrainConfig(steps=4, crop=16, lr0=1e-3, seed=5)
    a = _denoise_run(clean_frames, cfg)
    b = _denoise_run(clean_frames, cfg)
    pd.testing.assert_frame_equal(a["log"], b["log"])
    for pa, pb in zip(a["model"].parameters(), b["model"].parameters(), strict=True):
        assert np.array_equal(pa, pb)
    assert a["optimizer"].t == 4


def test_resumed_run_matches_uninterrupted_run(clean_frames, tmp_path):
    cfg = TrainConfig(steps=10, crop=16, lr0=1e-3, checkpoint_every=5)
    full = _denoise_run(clean_frames, cfg, checkpoint_path=tmp_path / "full.hsnn")
    midpoint = tmp_path / "full_step000005.hsnn"
    assert midpoint.exists() and (tmp_path / "full.hsnn").exists()

    resumed = _denoise_run(clean_frames, cfg, resume=midpoint)
    assert resumed["log"]["step"].tolist() == [6, 7, 8, 9, 10]
    assert resumed["log"]["loss"].tolist() == full["log"]["loss"].iloc[5:].tolist()
    for pa, pb in zip(full["model"].parameters(), resumed["model"].parameters(), strict=True):
        assert np.array_equal(pa, pb)


def test_denoiser_training_with_bias_frames(clean_frames, tmp_path):
    db = striped_bias_db([1 / 1000], 2, 32, 32, seed=1)
    noise = SynthesisConfig(ratio_R=10, K=0.4)
    ds = PairedDataset.for_denoising(clean_frames, db)
    train, val = split_dataset(ds, 0.34, seed=0)
    result = train_denoiser(
        train,
        noise,
        TinyDenoiser(depth=3, width=4),
        TrainConfig(steps=3, crop=16, val_every=2),
        val=val,
        log_path=tmp_path / "log.jsonl",
        verbose=False,
    )
    assert np.isfinite(result["val_psnr"]) and np.isfinite(result["baseline_psnr"])
    assert result["log"]["val_psnr"].notna().tolist() == [False, True, True]

    report = run_log_report(tmp_path / "log.jsonl", verbose=False)
    assert report["summary"]["n_steps"] == 3
    assert "Best val PSNR" in report["text_report"]


def test_denoiser_training_needs_bias_db(clean_frames):
    with pytest.raises(InvariantViolation):
        train_denoiser(
            PairedDataset.for_denoising(clean_frames),
            SynthesisConfig(ratio_R=4),
            TinyDenoiser(depth=2, width=2),
            TrainConfig(steps=1, crop=16),
            verbose=False,
        )


def test_zero_step_mini_isp_is_untouched(clean_frames):
    rgbs = natural_scenes(3, 32, 32, seed=0)
    model = MiniIspModel(width=4)
    before = [p.copy() for p in model.parameters()]
    result = train_mini_isp(
        PairedDataset.for_isp(clean_frames, rgbs),
        model,
        TrainConfig.for_mini_isp(steps=0, crop=16),
        verbose=False,
    )
    assert result["log"].empty
    for a, b in zip(before, model.parameters(), strict=True):
        assert np.array_equal(a, b)
    assert np.isfinite(result["train_psnr"])


def test_run_log_summary(tmp_path):
    path = tmp_path / "log.jsonl"
    rows = [
        {"step": i, "lr": 1e-3, "loss": 1.0 / i, "val_psnr": 30.0 + i if i % 5 == 0 else None}
        for i in range(1, 21)
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows))
    report = run_log_report(path, verbose=False)
    summary = report["summary"]
    assert summary["loss_decreasing"]
    assert summary["best_val"]["step"] == 20
    assert summary["final_val_psnr"] == 50.0
    first, last = loss_trend(pd.DataFrame(rows))
    assert first == pytest.approx(0.75)
    assert last == pytest.approx((1 / 19 + 1 / 20) / 2)

    path.write_text(json.dumps({"step": 1, "loss": 1.0}))
    with pytest.raises(ValueError, match="Missing expected columns"):
        run_log_report(path, verbose=False)


def test_denoise_pipeline_output(clean_frames):
    cfg = SynthesisConfig(ratio_R=4, K=0.4, enable_SI=False)
    noisy = synthesize_noisy(clean_frames[0], cfg, None, Rng(0))
    denoiser, isp = TinyDenoiser(depth=2, width=4), MiniIspModel(width=4)
    out = denoise_pipeline(noisy, denoiser, isp)
    assert out.shape == (32, 32, 3) and out.dtype == np.uint8
    assert np.array_equal(out, denoise_pipeline(noisy, denoiser, isp))


def test_identity_denoiser_loss_is_flip_invariant():
    model = TinyDenoiser(depth=3, width=4)
    rng = Rng(12)
    x = (rng.derive("x").integers(0, 64, (4, 8, 8)) / 64).astype(np.float32)
    y = (rng.derive("y").integers(0, 64, (4, 8, 8)) / 64).astype(np.float32)
    base, _ = l1_loss(model(x[None]), y[None])
    assert base > 0
    for flips in [(True, False), (False, True), (True, True)]:
        fx, fy = apply_flips(x, flips), apply_flips(y, flips)
        assert l1_loss(model(fx[None]), fy[None])[0] == base


def test_pipeline_on_noise_free_synth_matches_clean(clean_frames):
    clean = clean_frames[0]
    cfg = SynthesisConfig(ratio_R=1, enable_SD=False, enable_SI=False)
    noisy = synthesize_noisy(clean, cfg, None, Rng(0))
    denoiser, isp = TinyDenoiser(depth=2, width=4), MiniIspModel(width=4)
    gains = frame_gains(clean)
    a = denoise_pipeline(noisy, denoiser, isp, gains, R=1.0)
    b = denoise_pipeline(clean, denoiser, isp, gains, R=1.0)
    assert psnr(a, b, MetricConfig(peak=255.0)) >= 45.0


def _isp_pairs(profile, cfg, n, size):
    raws, rgbs = [], []
    for i, img in enumerate(natural_scenes(n, size, size, seed=0)):
        frame = reconstruct_long_exposure(img, cfg, Rng(0).derive(i))
        raws.append(frame)
        rgbs.append(forward_isp(frame, frame_gains(frame), profile))
    return raws, rgbs


@pytest.mark.slow
def test_desk_scale_denoiser_beats_gain_baseline():
    clean = clean_raw_scenes(64, 128, 128, seed=0, shutter_s=1 / 100)
    db = striped_bias_db([1 / 800], 8, 128, 128, seed=1)
    noise = SynthesisConfig(ratio_R=8, K=0.4, seed=0)
    train, val = split_dataset(PairedDataset.for_denoising(clean, db), 0.15, seed=0)
    result = train_denoiser(
        train,
        noise,
        TinyDenoiser(),
        TrainConfig.for_denoiser(steps=2000, crop=64, val_every=500),
        val=val,
        verbose=False,
    )
    assert result["val_psnr"] - result["baseline_psnr"] >= 3.0
    first, last = loss_trend(result["log"])
    assert last < first


@pytest.mark.slow
def test_mini_isp_learns_affine_map():
    profile = default_profile(wb_red_range=(1.0, 1.0), wb_blue_range=(1.0, 1.0))
    cfg = ReconstructionConfig(gamma=1.0, profile=profile, seed=0)
    raws, rgbs = _isp_pairs(profile_with_gamma(cfg), cfg, 8, 32)
    result = train_mini_isp(
        PairedDataset.for_isp(raws, rgbs),
        MiniIspModel(width=8),
        TrainConfig.for_mini_isp(steps=3000, crop=None),
        verbose=False,
    )
    assert result["train_psnr"] >= 40.0


@pytest.mark.slow
def test_mini_isp_closed_loop_and_pipeline():
    ccm = np.array([[1.6, -0.4, -0.2], [-0.3, 1.5, -0.2], [-0.1, -0.5, 1.6]])
    profile = default_profile(ccm=ccm)
    raws, rgbs = _isp_pairs(profile, ReconstructionConfig(profile=profile, seed=0), 40, 64)
    result = train_mini_isp(
        PairedDataset.for_isp(raws[:34], rgbs[:34]),
        MiniIspModel(width=32),
        TrainConfig.for_mini_isp(steps=5000, crop=64, val_every=1000),
        val=PairedDataset.for_isp(raws[34:], rgbs[34:]),
        verbose=False,
    )
    assert result["val_psnr"] >= 35.0

    identity = TinyDenoiser(depth=2, width=4)
    scores = [
        psnr(denoise_pipeline(raw, identity, result["model"], R=1.0), rgb, MetricConfig(peak=255.0))
        for raw, rgb in zip(raws[34:], rgbs[34:], strict=True)
    ]
    assert np.mean(scores) >= result["val_psnr"] - 0.5


@pytest.mark.slow
def test_mini_isp_loss_decreases(clean_frames):
    rgbs = natural_scenes(3, 32, 32, seed=0)
    result = train_mini_isp(
        PairedDataset.for_isp(clean_frames, rgbs),
        MiniIspModel(width=8),
        TrainConfig.for_mini_isp(steps=200, crop=16),
        verbose=False,
    )
    first, last = loss_trend(result["log"])
    assert last < first
