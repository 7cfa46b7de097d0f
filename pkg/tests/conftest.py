import numpy as np
import pytest

from gaussmix.eigenfield import uniform_shift_field
from gaussmix.gaussian import GammaOperator
from gaussmix.operators import ShiftSpec, weighted_shift

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def shift32():
    spec = ShiftSpec.constant(2.0, 32)
    field = uniform_shift_field(spec, 1024)
    return spec, weighted_shift(spec), field, GammaOperator.from_field(field)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
