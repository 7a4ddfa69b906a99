import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def binomial_slack(rate: float, trials: int, sigmas: float = 3.0) -> float:
    return sigmas * np.sqrt(rate * (1 - rate) / trials)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
