import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_acceptance():
    """Print one pass/fail line per criterion and keep it for the terminal summary."""

    def record(criterion, results):
        passed = bool(results) and all(r.passed for r in results)
        detail = "; ".join(f"{'ok' if r.passed else 'FAILED'} {r.name}: {r.detail}"
                           for r in results)
        line = f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
