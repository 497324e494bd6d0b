import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def verdict(request):
    """Record a one-line pass/fail verdict and fail the test when it is a FAIL."""
    lines = request.config.stash[_LINES]

    def record(crit, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {crit}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
