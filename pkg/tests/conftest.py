from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fracinv.grids import Grid2D, TimeGrid
from fracinv.operator import BoundaryCondition, EllipticOperatorSpec, assemble

settings.register_profile(
    "fracinv", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("fracinv")


def gaussian(t):
    return np.exp(-((t - 0.4) ** 2) / (2 * 0.12**2)) / (math.sqrt(2 * math.pi) * 0.12)


@pytest.fixture(scope="session")
def small_grid():
    return Grid2D(17, 17)


@pytest.fixture(scope="session")
def neumann_op(small_grid):
    return assemble(small_grid, EllipticOperatorSpec())


@pytest.fixture(scope="session")
def dirichlet_op(small_grid):
    return assemble(small_grid, EllipticOperatorSpec(bc=BoundaryCondition.DIRICHLET))


@pytest.fixture(scope="session")
def short_time():
    return TimeGrid(1.0, 64)


@pytest.fixture(scope="session")
def frame_mask(small_grid):
    x, y = small_grid.coords
    return ~((x > 0.1) & (x < 0.9) & (y > 0.1) & (y < 0.9))


ACCEPTANCE_LINES: list[str] = []
"""One summary line per acceptance criterion, filled by test_acceptance.py."""


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
