import math

import pytest

from husimi_tomo.states import (
    make_coherent_state,
    make_number_state,
    make_pure_state,
    make_thermal_state,
)

DIM = 64


def canonical_states(dim=DIM):
    """The six reference states used across transform and acceptance tests."""
    return {
        "vacuum": make_number_state(0, dim),
        "number1": make_number_state(1, dim),
        "number2": make_number_state(2, dim),
        "coherent": make_coherent_state(1 + 0.5j, dim),
        "thermal": make_thermal_state(0.5, dim),
        "superposition": make_pure_state([1 / math.sqrt(2), 0, 1 / math.sqrt(2)], dim),
    }


@pytest.fixture(scope="session")
def states():
    return canonical_states()


# Acceptance lines collected by tests/test_acceptance.py and echoed at the end of the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
