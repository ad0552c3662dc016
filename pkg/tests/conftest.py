import warnings

import numpy as np
import pytest

from roomcurve.roomsim import GenerationConfig, generate_dataset


@pytest.fixture(scope="session")
def small_records():
    """40 default-configuration rooms, generated once per session."""
    return generate_dataset(GenerationConfig(), rooms=40, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


_ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    """Record one acceptance line; printed again in the terminal summary."""

    def record(label, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
