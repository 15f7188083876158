import numpy as np
import pytest

from bfcsim.channels import ChannelScenario

ACCEPTANCE_LINES = []


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def channel_draws():
    """100 independent trial draws at Nt = Nr = 16 with the default scenario."""
    sc = ChannelScenario(16, 16)
    return [sc.draw(np.random.default_rng([77, t])) for t in range(100)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
