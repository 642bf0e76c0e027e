import json
import math

import numpy as np
import pytest

from hsn.core.errors import DimensionMismatch, ImageTooSmall, InvariantViolation, MissingPair
from hsn.core.imageio import write_rgb8
from hsn.core.rawio import write_raw
from hsn.core.rng import Rng
from hsn.core.types import RawFrame
from hsn.metrics.quality import MetricConfig, gaussian_window, psnr, ssim
from hsn.metrics.report import eval_report, save_eval_report


def _psnr_oracle(a, b, peak):
    total = 0.0
    for x, y in zip(a.ravel().tolist(), b.ravel().tolist(), strict=True):
        total += (x - y) ** 2
    return 10 * math.log10(peak**2 / (total / a.size))


def _ssim_oracle(a, b, cfg):
    w = gaussian_window(cfg.ssim_window, cfg.ssim_sigma)
    n = cfg.ssim_window
    c1, c2 = (cfg.k1 * cfg.peak) ** 2, (cfg.k2 * cfg.peak) ** 2
    values = []
    for i in range(a.shape[0] - n + 1):
        for j in range(a.shape[1] - n + 1):
            pa, pb = a[i : i + n, j : j + n], b[i : i + n, j : j + n]
            mu_a, mu_b = (w * pa).sum(), (w * pb).sum()
            var_a = (w * (pa - mu_a) ** 2).sum()
            var_b = (w * (pb - mu_b) ** 2).sum()
            cov = (w * (pa - mu_a) * (pb - mu_b)).sum()
            num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
            den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
            values.append(num / den)
    return float(np.mean(values))


def test_config_invariants():
    with pytest.raises(InvariantViolation):
        MetricConfig(peak=0)
    with pytest.raises(InvariantViolation):
        MetricConfig(ssim_window=10)


def test_psnr_identical_is_capped():
    a = Rng(0).random((8, 8))
    assert psnr(a, a) == 100.0


def test_psnr_constant_offset():
    a, b = np.full((4, 4), 0.5), np.full((4, 4), 0.25)
    assert psnr(a, b, MetricConfig(peak=1.0)) == pytest.approx(12.0412, abs=1e-4)


def test_psnr_matches_oracle_and_is_symmetric():
    base = Rng(1)
    for i in range(50):
        rng = base.derive(i)
        h, w = 16 + 2 * rng.integers(0, 25), 16 + 2 * rng.integers(0, 25)
        a, b = rng.random((h, w)), rng.random((h, w))
        assert psnr(a, b) == pytest.approx(_psnr_oracle(a, b, 1.0), abs=1e-9)
        assert psnr(a, b) == psnr(b, a)


def test_psnr_decreases_with_noise_amplitude():
    a = Rng(2).random((32, 32))
    noise = Rng(3).normal((32, 32))
    scores = [psnr(a, a + s * noise) for s in (0.01, 0.02, 0.05, 0.1, 0.2)]
    assert all(y < x for x, y in zip(scores, scores[1:], strict=False))


def test_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(DimensionMismatch):
        ssim(np.zeros((16, 16)), np.zeros((16, 18)))


def test_gaussian_window_sums_to_one():
    assert abs(gaussian_window(11, 1.5).sum() - 1.0) < 1e-12


def test_ssim_identity():
    a = Rng(4).random((20, 24, 3))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-9)


def test_ssim_constant_images():
    cfg = MetricConfig(peak=1.0)
    c1 = (0.01 * 1.0) ** 2
    expected = (2 * 0.8 * 0.4 + c1) / (0.8**2 + 0.4**2 + c1)
    assert ssim(np.full((16, 16), 0.8), np.full((16, 16), 0.4), cfg) == pytest.approx(
        expected, abs=1e-9
    )


def test_ssim_matches_sliding_window_oracle():
    base = Rng(5)
    cfg = MetricConfig(peak=1.0)
    for i in range(10):
        rng = base.derive(i)
        a = rng.random((16, 16))
        b = np.clip(a + 0.1 * rng.normal((16, 16)), 0, 1)
        assert ssim(a, b, cfg) == pytest.approx(_ssim_oracle(a, b, cfg), abs=1e-7)


def test_ssim_averages_channels():
    rng = Rng(6)
    a, b = rng.random((16, 16, 3)), rng.random((16, 16, 3))
    per_channel = [ssim(a[..., c], b[..., c]) for c in range(3)]
    assert ssim(a, b) == pytest.approx(np.mean(per_channel), abs=1e-12)


def test_ssim_too_small():
    with pytest.raises(ImageTooSmall):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))


def _write_rgb_pair(tmp_path, names, noise=0):
    pred, gt = tmp_path / "pred", tmp_path / "gt"
    pred.mkdir()
    gt.mkdir()
    for i, name in enumerate(names):
        img = Rng(10, i).integers(0, 256, (16, 16, 3)).astype(np.uint8)
        write_rgb8(img, gt / name)
        noisy = np.clip(img.astype(int) + noise * (i + 1), 0, 255).astype(np.uint8)
        write_rgb8(noisy, pred / name)
    return pred, gt


def test_eval_report_identical_rgb(tmp_path):
    pred, gt = _write_rgb_pair(tmp_path, ["a.png", "b.png"])
    result = eval_report(pred, gt, space="rgb")
    assert result["mean_ssim"] == pytest.approx(1.0, abs=1e-9)
    assert result["mean_psnr"] == 100.0
    assert result["table"]["name"].tolist() == ["a.png", "b.png"]


def test_eval_report_means_and_files(tmp_path):
    pred, gt = _write_rgb_pair(tmp_path, ["a.png", "b.png", "c.png"], noise=3)
    result = eval_report(pred, gt, space="rgb")
    table = result["table"]
    assert result["mean_psnr"] == pytest.approx(table["psnr"].mean())
    assert result["mean_ssim"] == pytest.approx(table["ssim"].mean())
    assert table["psnr"].is_monotonic_decreasing

    json_path, csv_path = save_eval_report(result, tmp_path / "report.json")
    assert json.loads(json_path.read_text())["space"] == "rgb"
    assert csv_path.exists()


def test_eval_report_raw_space(tmp_path):
    pred, gt = tmp_path / "pred", tmp_path / "gt"
    pred.mkdir()
    gt.mkdir()
    clean = RawFrame(np.full((16, 16), 1129, dtype=np.uint16), black_level=129, white_level=4095)
    write_raw(clean, gt / "f.hsrw")
    write_raw(clean.with_data(clean.data + 100), pred / "f.hsrw")
    result = eval_report(pred, gt, space="raw")
    expected = 10 * math.log10(3966**2 / 100**2)
    assert result["mean_psnr"] == pytest.approx(expected)


def test_eval_report_missing_pair(tmp_path):
    pred, gt = _write_rgb_pair(tmp_path, ["a.png", "b.png"])
    (pred / "b.png").unlink()
    with pytest.raises(MissingPair, match="b.png"):
        eval_report(pred, gt, space="rgb")
