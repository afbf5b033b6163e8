import numpy as np
import pytest

from eminverse.geometry import build_sphere_quadrature, build_volume_grid
from eminverse.medium import Bump, MediumSpec, WaveParams

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def wave2():
    return WaveParams.from_k(2.0)


@pytest.fixture
def wave3():
    return WaveParams.from_k(3.0)


@pytest.fixture
def bump_medium():
    return MediumSpec.single_bump(0.1, radius=1.0)


@pytest.fixture
def lumpy_medium():
    """Two off-centre absorbing bumps; no symmetry to hide behind."""
    return MediumSpec(
        (
            Bump((0.3, -0.2, 0.1), 0.5, 0.08 + 0.02j, 3),
            Bump((-0.35, 0.25, -0.2), 0.45, 0.05 + 0.01j, 4),
        ),
        1.0,
    )


@pytest.fixture
def small_grid():
    return build_volume_grid(1.0, 5)


@pytest.fixture
def quad_4x8():
    return build_sphere_quadrature(4, 8)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
