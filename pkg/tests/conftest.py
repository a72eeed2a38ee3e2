"""
Shared fixtures: small domains and grids that keep every test fast.
"""

import numpy as np
import pytest

from bernoulli_lab.components.energy import ScalarField
from bernoulli_lab.components.geometry import DomainSpec, build_grid
from bernoulli_lab.utils.logger import setup_logger


@pytest.fixture(scope="session", autouse=True)
def package_logger():
    """Create the package log handler once, outside any CLI runner."""
    return setup_logger()


@pytest.fixture
def unit_square():
    return DomainSpec(kind="rectangle", params={"xmin": 0.0, "xmax": 1.0, "ymin": 0.0, "ymax": 1.0})


@pytest.fixture
def unit_interval():
    return DomainSpec(kind="interval", params={"a": 0.0, "b": 1.0})


@pytest.fixture
def coarse_square(unit_square):
    """3 x 3 interior cells, 16 boundary cells."""
    return build_grid(unit_square, 0.25)


@pytest.fixture
def coarse_interval(unit_interval):
    return build_grid(unit_interval, 0.25)


@pytest.fixture
def fine_interval(unit_interval):
    return build_grid(unit_interval, 1.0 / 16.0)


@pytest.fixture
def x_field(coarse_square):
    """u(x, y) = x on the closed square."""
    values = np.where(coarse_square.closure, coarse_square.centers[..., 0], 0.0)
    return ScalarField(coarse_square, values)
