import numpy as np
import pytest

from hsn.core.errors import InvariantViolation, MalformedHeader, TruncatedData
from hsn.core.rawio import (
    decode_raw,
    encode_raw,
    load_bias_db,
    read_raw,
    read_raw_with_sidecar,
    read_sidecar,
    save_bias_db,
    write_raw,
    write_raw_with_sidecar,
)
from hsn.core.rng import Rng
from hsn.core.schema import EXPECTED_RECONSTRUCTION_SIDECAR_KEYS
from hsn.core.types import BayerPattern, RawFrame


def _random_frame(rng: Rng) -> RawFrame:
    h = 2 * rng.integers(1, 9)
    w = 2 * rng.integers(1, 9)
    black = rng.integers(0, 1000)
    white = rng.integers(black + 1, 65536)
    return RawFrame(
        data=rng.integers(0, 65536, (h, w)).astype(np.uint16),
        pattern=BayerPattern.from_code(rng.integers(0, 4)),
        black_level=black,
        white_level=white,
        shutter_s=rng.uniform(1e-5, 1e-1) if rng.coin() else None,
    )


def test_hsrw_round_trip_random_frames():
    base = Rng(0, "rawio")
    for i in range(100):
        frame = _random_frame(base.derive(i))
        again = decode_raw(encode_raw(frame))
        assert np.array_equal(again.data, frame.data)
        assert again.pattern == frame.pattern
        assert again.black_level == frame.black_level
        assert again.white_level == frame.white_level
        assert again.shutter_s == frame.shutter_s


def test_file_size_and_byte_identical_rewrites(tmp_path):
    frame = RawFrame(np.arange(48).reshape(6, 8), black_level=2, white_level=100, shutter_s=1e-3)
    a, b = tmp_path / "a.hsrw", tmp_path / "b.hsrw"
    write_raw(frame, a)
    write_raw(frame, b)
    assert a.stat().st_size == 32 + 6 * 8 * 2
    assert a.read_bytes() == b.read_bytes()
    assert read_raw(a).shutter_s == 1e-3


def test_header_layout():
    frame = RawFrame(np.zeros((2, 4), dtype=np.uint16), BayerPattern.GRBG, 129, 4095)
    buf = encode_raw(frame)
    assert buf[:4] == b"HSRW"
    assert buf[4] == 1 and buf[5] == 2
    assert int.from_bytes(buf[8:12], "little") == 4
    assert int.from_bytes(buf[12:16], "little") == 2
    assert int.from_bytes(buf[16:18], "little") == 129
    assert int.from_bytes(buf[18:20], "little") == 4095


def test_bad_magic():
    buf = bytearray(encode_raw(RawFrame(np.zeros((4, 4), dtype=np.uint16))))
    buf[:4] = b"XXXX"
    with pytest.raises(MalformedHeader):
        decode_raw(bytes(buf))


def test_truncated_payload():
    buf = encode_raw(RawFrame(np.zeros((4, 4), dtype=np.uint16)))
    assert len(buf) == 32 + 32
    with pytest.raises(TruncatedData):
        decode_raw(buf[:-1])


def test_black_not_below_white_is_rejected():
    buf = bytearray(encode_raw(RawFrame(np.zeros((2, 2), dtype=np.uint16), white_level=100)))
    buf[16:18] = (100).to_bytes(2, "little")
    with pytest.raises(InvariantViolation):
        decode_raw(bytes(buf))


def test_read_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_raw(tmp_path / "missing.hsrw")


def test_sidecar_round_trip(tmp_path):
    meta = {"source_id": "a", "gamma": 3.0, "g_red": 2.0, "g_blue": 1.5, "digital_gain": 1.0}
    frame = RawFrame(np.zeros((2, 2), dtype=np.uint16), meta={**meta, "seed": 4})
    path = tmp_path / "a.hsrw"
    write_raw_with_sidecar(frame, path)
    assert read_raw_with_sidecar(path).meta["g_red"] == 2.0
    assert read_sidecar(path, EXPECTED_RECONSTRUCTION_SIDECAR_KEYS)["seed"] == 4


def test_sidecar_missing_keys(tmp_path):
    frame = RawFrame(np.zeros((2, 2), dtype=np.uint16), meta={"source_id": "a"})
    path = tmp_path / "a.hsrw"
    write_raw_with_sidecar(frame, path)
    with pytest.raises(ValueError, match="Missing expected keys"):
        read_sidecar(path, EXPECTED_RECONSTRUCTION_SIDECAR_KEYS)


def test_bias_db_save_load(tmp_path, bias_db):
    save_bias_db(bias_db, tmp_path / "bias")
    again = load_bias_db(tmp_path / "bias")
    assert again.shutters() == bias_db.shutters()
    assert again.device == "synthetic"
    for shutter in bias_db.shutters():
        for a, b in zip(again.bucket(shutter), bias_db.bucket(shutter), strict=True):
            assert np.array_equal(a.data, b.data)
        assert again.frame_id(shutter, 0).endswith(".hsrw")


def test_bias_db_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_bias_db(tmp_path)
