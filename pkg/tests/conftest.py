import pytest

from lsdeficit.corpus import corpus

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def corpus_densities():
    return corpus()


@pytest.fixture
def record_criterion():
    def record(number, ok, text):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
