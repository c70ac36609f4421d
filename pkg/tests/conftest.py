import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import relaxbench as rb

settings.register_profile(
    "ci",
    derandomize=True,
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def grid64():
    return rb.SpatialGrid((64,), (1.0,))


@pytest.fixture(scope="session")
def grid128():
    return rb.SpatialGrid((128,), (1.0,))


@pytest.fixture(scope="session")
def grid256():
    return rb.SpatialGrid((256,), (1.0,))


@pytest.fixture(scope="session")
def grid2d():
    return rb.SpatialGrid((32, 32), (1.0, 1.0))


def sine_mode(grid, mode=1, amplitude=1.0, offset=0.0):
    pts = grid.points()
    prof = np.ones(grid.ns)
    for j in range(grid.d):
        prof = prof * np.sin(2.0 * np.pi * mode * pts[j] / grid.lengths[j])
    return (offset + amplitude * prof)[None]
