import numpy as np
import pytest

_acceptance_lines = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _report(name, ok, detail=""):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        _acceptance_lines.append(f"{status}  {name}  {detail}".rstrip())
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
