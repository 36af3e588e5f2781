import numpy as np
import pytest

from rifvacuum.medium import FrontFrame, fused_silica, scale_medium
from rifvacuum.modes import find_sli


@pytest.fixture(scope="session")
def silica():
    return fused_silica()


@pytest.fixture(scope="session")
def frame():
    return FrontFrame(0.66)


@pytest.fixture(scope="session")
def step_002(silica):
    return scale_medium(silica, 0.02)


@pytest.fixture(scope="session")
def slis_002(step_002, frame):
    return find_sli(step_002.left, frame, "L"), find_sli(step_002.right, frame, "R")


def config_points(slis):
    """One omega' inside each of the five configurations (generic low-delta_n ordering)."""
    sl, sr = slis
    e = sorted([sl.omega_min, sl.omega_max, sr.omega_min, sr.omega_max])
    return {
        1: 0.5 * e[0],
        2: 0.5 * (e[0] + e[1]),
        3: 0.5 * (e[1] + e[2]),
        4: 0.5 * (e[2] + e[3]),
        5: 1.3 * e[3],
    }


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)
