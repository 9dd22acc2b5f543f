import numpy as np
import pytest

from ahmscatter.metric import MetricModel

ACCEPTANCE_LINES = []


@pytest.fixture
def hyp1():
    return MetricModel.hyperbolic(1)


@pytest.fixture
def hyp2():
    return MetricModel.hyperbolic(2)


@pytest.fixture
def pert1():
    return MetricModel.perturbed(1, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
