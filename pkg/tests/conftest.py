import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("pkg", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("pkg")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES.append((number, f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
