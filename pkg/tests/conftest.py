import numpy as np
import pytest

from roughwpi.paths import DiscretePath, RngStream, sample_brownian

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def line1():
    return lambda level: DiscretePath.from_function(lambda t: t, 1, level)


@pytest.fixture
def brownian():
    def make(d, level, seed=0, index=0, scale=1.0):
        return sample_brownian(d, level, RngStream(seed, index)) * scale

    return make


def path_from(vals):
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return DiscretePath(vals)
