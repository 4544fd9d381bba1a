import numpy as np
import pytest

from nlslab.spectral import SpectralField, make_grid


def band_limited(grid, rng, kcut=None, width=None):
    """Random smooth complex field with modes confined to |xi| < kcut.

    With ``width`` the field is additionally localized by a Gaussian
    envelope (which leaks a negligible tail past ``kcut``).
    """
    kcut = kcut if kcut is not None else 0.5 * grid.dk * grid.m / 2
    noise = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    modes = np.where(grid.kabs < kcut, noise, 0.0)
    f = SpectralField.from_modes(grid, modes)
    if width is not None:
        env = np.exp(-(grid.radius**2) / (2 * width**2))
        f = SpectralField(grid, f.values * env)
    return f


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid2():
    return make_grid(2, 32, 4 * np.pi)


@pytest.fixture(scope="session")
def grid3():
    return make_grid(3, 16, 4 * np.pi)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance lines, which pytest would otherwise capture."""
    import sys

    lines = getattr(sys.modules.get("test_acceptance"), "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
