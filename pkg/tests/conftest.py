import numpy as np
import pytest

from nqdlab.marginals import parse_marginal
from nqdlab.scaling import ScalingFamily


@pytest.fixture
def pareto18():
    return parse_marginal("pareto(alpha=1.8, xm=1.0)")


@pytest.fixture
def fam15():
    return ScalingFamily(p=1.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config.acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in config.acceptance_lines:
            terminalreporter.write_line(line)
