import numpy as np
import pytest

from jumpflow import GridDomain, PLaplacian, StateField, WeightField
from jumpflow import fields

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[(32,), (8, 8)], ids=["1d", "2d"])
def grid(request):
    return GridDomain.unit(*request.param)


@pytest.fixture(params=[1.5, 3.0, 4.0], ids=lambda p: f"p{p:g}")
def p(request):
    return request.param


@pytest.fixture
def op(grid, p):
    weight = WeightField.from_cells(grid, fields.bump(grid, 1.0, 1.0, 0.25))
    return PLaplacian.build(grid, p, weight)


def smooth(grid, rng, amplitude=1.0):
    return StateField(grid, fields.random_smooth(grid, rng, amplitude=amplitude))


def rough(grid, rng):
    return StateField(grid, fields.random_uniform(grid, rng))
