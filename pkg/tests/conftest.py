"""Shared fixtures plus a terminal hook that echoes acceptance results.

Acceptance tests record one PASS/FAIL line each; pytest captures stdout of
passing tests, so the lines are replayed in the terminal summary where they
are always visible.
"""

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record(line):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_stochastic(rng, n):
    return rng.dirichlet(np.ones(n), size=n)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
