import math

import numpy as np
import pytest

from bgkheat.phase_space import build_grid

VERDICTS: list[str] = []


def brute_force_entropy(f, T, grid):
    """Loop-by-loop evaluation of int int f ln f - int ln T, as an independent oracle."""
    total = 0.0
    for i in range(grid.nx):
        row = 0.0
        for j in range(grid.nv):
            value = f[i, j]
            if value > 1e-300:
                row += grid.velocity_weights[j] * value * math.log(value)
        total += (row - math.log(T[i])) / grid.nx
    return total


@pytest.fixture
def small_grid():
    return build_grid(16, 129, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
