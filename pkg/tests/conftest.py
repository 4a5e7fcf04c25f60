import numpy as np
import pytest

from elastodort.elastic_core import make_medium


@pytest.fixture(scope="session")
def medium():
    return make_medium(1.0, 2.0, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one pass/fail line per acceptance criterion."""

    def log(number, title, passed, measured, tolerance):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} | measured {measured} | tolerance {tolerance}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
