import numpy as np
import pytest

from hsn.core.errors import CropOutOfBounds, InvariantViolation, SingularMatrix, UnknownShutter
from hsn.core.types import (
    BLUE,
    GREEN,
    RED,
    BayerPattern,
    BiasFrameDB,
    CameraProfile,
    RawFrame,
    default_profile,
)


@pytest.mark.parametrize("pattern", list(BayerPattern))
def test_every_quad_has_one_red_one_blue_two_greens(pattern):
    quad = [pattern.channel_at(r, c) for r in range(2) for c in range(2)]
    assert sorted(quad) == [RED, GREEN, GREEN, BLUE]
    assert pattern.channel_at(5, 7) == pattern.channel_at(1, 1)


def test_channel_masks_partition_the_grid():
    masks = BayerPattern.GRBG.channel_masks(4, 6)
    assert masks.shape == (3, 4, 6)
    assert np.all(masks.sum(axis=0) == 1)
    assert masks[GREEN].sum() == 12


@pytest.mark.parametrize("pattern", list(BayerPattern))
def test_packed_offsets_order(pattern):
    r, g1, g2, b = pattern.packed_offsets()
    assert pattern.channel_at(*r) == RED
    assert pattern.channel_at(*b) == BLUE
    assert pattern.channel_at(*g1) == GREEN and g1[0] == r[0]
    assert pattern.channel_at(*g2) == GREEN and g2 != g1


def test_raw_frame_rejects_odd_dimensions():
    with pytest.raises(InvariantViolation):
        RawFrame(np.zeros((4, 5), dtype=np.uint16))


def test_raw_frame_rejects_bad_levels():
    with pytest.raises(InvariantViolation):
        RawFrame(np.zeros((4, 4), dtype=np.uint16), black_level=200, white_level=200)


def test_raw_frame_data_is_read_only():
    frame = RawFrame(np.zeros((2, 2), dtype=np.uint16))
    with pytest.raises(ValueError):
        frame.data[0, 0] = 1


def test_normalized_and_signal():
    frame = RawFrame(np.array([[100, 129], [2112, 4095]]), black_level=129, white_level=4095)
    assert frame.normalized()[0, 0] == 0.0
    assert frame.signal()[0, 0] == -29.0
    assert frame.normalized()[1, 0] == pytest.approx(0.5)
    assert frame.normalized()[1, 1] == 1.0


def test_odd_crop_shifts_pattern():
    frame = RawFrame(np.zeros((8, 8), dtype=np.uint16), pattern=BayerPattern.RGGB)
    assert frame.crop(1, 0, 4, 4).pattern == BayerPattern.GRBG
    assert frame.crop(0, 1, 4, 4).pattern == BayerPattern.GBRG
    assert frame.crop(1, 1, 4, 4).pattern == BayerPattern.BGGR
    assert frame.crop(2, 2, 4, 4).pattern == BayerPattern.RGGB


def test_crop_out_of_bounds():
    frame = RawFrame(np.zeros((4, 4), dtype=np.uint16))
    with pytest.raises(CropOutOfBounds):
        frame.crop(2, 0, 4, 4)


def test_profile_rejects_singular_ccm():
    with pytest.raises(SingularMatrix):
        CameraProfile(ccm=np.zeros((3, 3)))


def test_profile_rejects_inverted_wb_range():
    with pytest.raises(InvariantViolation):
        CameraProfile(wb_red_range=(2.0, 1.5))


def test_profile_dict_round_trip():
    profile = default_profile(K=0.8, pattern=BayerPattern.BGGR)
    again = CameraProfile.from_dict(profile.to_dict())
    assert again.to_dict() == profile.to_dict()


def test_profile_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError, match="Unknown camera profile keys"):
        CameraProfile.from_dict({"K": 0.4, "iso": 100})


def test_bias_db_lookup():
    frames = [RawFrame(np.full((4, 4), 129, dtype=np.uint16), black_level=129)] * 2
    db = BiasFrameDB({1 / 1000: frames, 1 / 100: frames[:1]})
    assert db.shutters() == [1 / 1000, 1 / 100]
    assert db.key_for(0.001) == 1 / 1000
    assert db.frame_id(1 / 1000, 1) == "0.001s_0001"
    with pytest.raises(UnknownShutter):
        db.key_for(1 / 500)
    with pytest.raises(UnknownShutter):
        db.resolve_shutter(None)


def test_bias_db_rejects_mixed_geometry():
    a = RawFrame(np.zeros((4, 4), dtype=np.uint16))
    b = RawFrame(np.zeros((4, 6), dtype=np.uint16))
    with pytest.raises(InvariantViolation):
        BiasFrameDB({0.01: [a, b]})
