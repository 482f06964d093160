import numpy as np
import pytest

from agc import lqrsyn, plant

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def model():
    return plant.paper_model()


@pytest.fixture(scope="session")
def lqr_identity(model):
    """CARE solution and gain for Q = I, R = I on the published model."""
    return lqr_solution(model)


def lqr_solution(model, **kw):
    return lqrsyn.lqr(model, np.eye(11), np.eye(2), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
