import numpy as np
import pytest

GATE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gate(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}"
        if detail:
            line += f" ({detail})"
        GATE_RESULTS.append((number, line))
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not GATE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(GATE_RESULTS):
        terminalreporter.write_line(line)
