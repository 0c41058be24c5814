import pytest

from tycsim.model import MuSchedule, Parameters

ACCEPTANCE_LINES = []


@pytest.fixture
def unit_params():
    """beta below threshold defaults: d_i = 1, K = 1."""
    return Parameters(beta=16.0, K=1.0, d1=1.0, d2=1.0, d3=1.0, d4=1.0)


@pytest.fixture
def decaying_mu():
    return MuSchedule("exponential-decay", mu0=1.0, gamma=0.5)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion.

    Usage: ``criterion("5", "bounds preservation", ok, detail)``; the line
    is stored for the terminal summary and the assertion is made here so
    the test fails exactly when the line says FAIL.
    """

    def record(number, title, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {number}: {title}"
        if detail:
            line += f" -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
