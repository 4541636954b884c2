from __future__ import annotations

import numpy as np
import pytest

from mhdlab.grid import ComplexField, PeriodicGrid
from mhdlab.profiles import build_profile


def band_limited(grid: PeriodicGrid, seed: int, cutoff: int = 16) -> np.ndarray:
    """Seeded random field with spectrum cut well below Nyquist."""
    rng = np.random.default_rng(seed)
    k = np.fft.fftfreq(grid.n) * grid.n
    coef = np.exp(-0.5 * np.abs(k)) * (rng.standard_normal(grid.n)
                                       + 1j * rng.standard_normal(grid.n))
    coef[np.abs(k) > cutoff] = 0.0
    return np.fft.ifft(coef)


@pytest.fixture(scope="session")
def grid128() -> PeriodicGrid:
    return PeriodicGrid(128)


@pytest.fixture(scope="session")
def grid256() -> PeriodicGrid:
    return PeriodicGrid(256)


@pytest.fixture(scope="session")
def constant_profile(grid128):
    """u = 0, b = 1: the rotating reference case."""
    return build_profile({"family": "constant", "value": 0.0},
                         {"family": "constant", "value": 1.0}, grid128)


@pytest.fixture(scope="session")
def shear_profile(grid256):
    """u = 0.1 sin y, b = 1: the default sheared case."""
    return build_profile({"family": "sine", "amplitude": 0.1, "wavenumber": 1,
                          "offset": 0.0},
                         {"family": "constant", "value": 1.0}, grid256)


@pytest.fixture(scope="session")
def shear_profile_128(grid128):
    return build_profile({"family": "sine", "amplitude": 0.1, "wavenumber": 1,
                          "offset": 0.0},
                         {"family": "constant", "value": 1.0}, grid128)


@pytest.fixture()
def random_pair_128(grid128):
    psi = ComplexField(grid128, band_limited(grid128, 11))
    phi = ComplexField(grid128, band_limited(grid128, 12))
    return psi, phi
