import numpy as np
import pytest

from qhydro import gaussian_packet, make_grid


@pytest.fixture(scope="session")
def grid256():
    # wide enough that a sigma=1 Gaussian decays below 1e-14 at the boundary
    return make_grid(20.0, 256)


@pytest.fixture(scope="session")
def grid1024():
    return make_grid(40.0, 1024)


@pytest.fixture()
def unit_gaussian(grid256):
    return gaussian_packet(grid256, 1.0)


def smooth_periodic(grid, seed, n_modes=6, amplitude=1.0):
    """Deterministic band-limited test field: a low-order trig series."""
    rng = np.random.default_rng(seed)
    x = grid.x
    f = np.zeros_like(x)
    for n in range(1, n_modes + 1):
        k = np.pi * n / grid.half_width
        f += rng.normal() * np.cos(k * x) + rng.normal() * np.sin(k * x)
    return amplitude * f
