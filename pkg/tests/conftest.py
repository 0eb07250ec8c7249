import numpy as np
import pytest

from lowmach.fields import Grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid64():
    return Grid(2, 64)


@pytest.fixture(scope="session")
def grid32():
    return Grid(2, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def band_limited(grid, rng, modes, ncomp=None):
    """Random real field with wavenumbers |k_i| <= modes."""
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for m in grid.modes:
        keep &= np.abs(m) <= modes

    def one():
        c = rng.standard_normal(grid.spectral_shape) + 1j * rng.standard_normal(grid.spectral_shape)
        return grid.ifft(np.where(keep, c, 0.0))

    if ncomp is None:
        return one()
    return np.stack([one() for _ in range(ncomp)])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
