import json

import pytest

from hsn.cli.main import main
from hsn.core.rawio import read_raw_with_sidecar


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    argv = ["simulate", "--out", str(out), "--scenes", "2", "--size", "32"]
    argv += ["--bias-frames", "2", "--stack-frames", "3", "--seed", "1"]
    assert main(argv) == 0
    return out


def _write_config(path, config):
    path.write_text(json.dumps(config))
    return str(path)


def test_usage_and_unknown_command(capsys):
    assert main([]) == 0
    assert "train-denoise" in capsys.readouterr().out
    assert main(["shrink"]) == 2
    assert "Unknown command: shrink" in capsys.readouterr().err


def test_simulate_layout(dataset):
    assert len(list((dataset / "rgb").glob("*.png"))) == 2
    assert len(list((dataset / "clean").glob("*.hsrw"))) == 2
    assert (dataset / "bias" / "manifest.json").exists()
    assert len(list((dataset / "flats").iterdir())) == 6


def test_reconstruct(dataset, tmp_path, capsys):
    out = tmp_path / "raw"
    assert main(["reconstruct", "--input", str(dataset / "rgb"), "--output", str(out)]) == 0
    frames = sorted(out.glob("*.hsrw"))
    assert [p.stem for p in frames] == ["scene_0000", "scene_0001"]
    assert "g_red" in read_raw_with_sidecar(frames[0]).meta
    assert "Reconstructed 2 frame(s)" in capsys.readouterr().out


def test_synth_then_eval(dataset, tmp_path, capsys):
    noisy = tmp_path / "noisy"
    argv = ["synth", "--clean", str(dataset / "clean"), "--output", str(noisy)]
    assert main(argv + ["--bias", str(dataset / "bias"), "--ratio", "10"]) == 0
    frame = read_raw_with_sidecar(noisy / "scene_0000.hsrw")
    assert frame.meta["ratio_R"] == 10
    assert frame.meta["bias_frame_id"] is not None

    report = tmp_path / "eval.json"
    argv = ["eval", "--pred", str(noisy), "--gt", str(dataset / "clean"), "--out", str(report)]
    assert main(argv) == 0
    assert json.loads(report.read_text())["space"] == "raw"
    assert report.with_suffix(".csv").exists()
    assert "Mean PSNR" in capsys.readouterr().out


def test_gain(dataset, tmp_path, capsys):
    plot = tmp_path / "ptc.png"
    assert main(["gain", "--flats", str(dataset / "flats"), "--plot", str(plot)]) == 0
    assert "System gain K" in capsys.readouterr().out
    assert plot.exists()


def test_analyze(dataset, tmp_path):
    out, plots = tmp_path / "noise.json", tmp_path / "plots"
    argv = ["analyze", "--stacks", str(dataset / "stacks"), "--bias", str(dataset / "bias")]
    argv += ["--bins", "32", "--out", str(out), "--plots", str(plots)]
    assert main(argv) == 0
    assert "curve" in json.loads(out.read_text())
    assert (plots / "noise_energy.png").exists() and (plots / "si_ratio.png").exists()


def test_train_both_models_then_denoise(dataset, tmp_path, capsys):
    den_cfg = _write_config(
        tmp_path / "den.json",
        {"steps": 2, "crop": 16, "ratio_R": 10, "K": 0.4, "model": {"depth": 2, "width": 4}},
    )
    den = tmp_path / "den.hsnn"
    argv = ["train-denoise", "--config", den_cfg, "--out", str(den), "--quiet"]
    argv += ["--plot", str(tmp_path / "loss.png")]
    assert main(argv + ["--clean", str(dataset / "clean"), "--bias", str(dataset / "bias")]) == 0
    assert den.exists() and den.with_suffix(".jsonl").exists()
    assert (tmp_path / "loss.png").exists()

    isp_cfg = _write_config(
        tmp_path / "isp.json",
        {"steps": 2, "crop": 16, "lr0": 0.01, "loss": "L2", "model": {"width": 4}},
    )
    isp = tmp_path / "isp.hsnn"
    argv = ["train-isp", "--config", isp_cfg, "--out", str(isp), "--quiet"]
    assert main(argv + ["--raw", str(dataset / "clean"), "--rgb", str(dataset / "rgb")]) == 0
    assert isp.exists()

    noisy = tmp_path / "noisy"
    argv = ["synth", "--clean", str(dataset / "clean"), "--output", str(noisy)]
    assert main(argv + ["--bias", str(dataset / "bias"), "--ratio", "10"]) == 0

    out = tmp_path / "rgb_out"
    argv = ["denoise", "--noisy", str(noisy), "--denoiser", str(den), "--isp", str(isp)]
    assert main(argv + ["--output", str(out)]) == 0
    assert sorted(p.name for p in out.glob("*.png")) == ["scene_0000.png", "scene_0001.png"]
    assert "Wrote 2 image(s)" in capsys.readouterr().out
