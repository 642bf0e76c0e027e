import matplotlib

matplotlib.use("Agg")

import pytest  # noqa: E402

from hsn.core.rng import Rng  # noqa: E402
from hsn.data.synthetic import natural_scene, striped_bias_db  # noqa: E402


@pytest.fixture
def scene():
    return natural_scene(32, 32, Rng(7, "scene"), value_range=(64, 255))


@pytest.fixture
def bias_db():
    return striped_bias_db([1 / 100, 1 / 1000], frames_per_shutter=4, height=16, width=16, seed=3)
