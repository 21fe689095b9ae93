import numpy as np
import pytest

from codesign.accel import DATAFLOWS, HwSpaceSample, sample_hardware
from codesign.archspace import generate_cell_space, generate_mobile_space


@pytest.fixture(scope="session")
def small_cell_space():
    return generate_cell_space(seed=11, count=24)


@pytest.fixture(scope="session")
def small_mobile_space():
    return generate_mobile_space(seed=11, count=24)


@pytest.fixture(scope="session")
def small_hw():
    return HwSpaceSample(
        accelerators=sample_hardware(7, 9, DATAFLOWS).accelerators, seed=7
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240917)
