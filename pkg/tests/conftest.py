import numpy as np
import pytest

from viscoplast.mesh import build_rectangle
from viscoplast.spaces import State


@pytest.fixture
def unit_square():
    return build_rectangle((0.0, 0.0), (1.0, 1.0), 1, 1)


@pytest.fixture
def square_4x4():
    return build_rectangle((0.0, 0.0), (1.0, 1.0), 4, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_state(mesh, rng, scale=1.0):
    state = State(mesh)
    state.coeffs[:] = scale * rng.normal(size=state.coeffs.shape)
    return state
