import numpy as np
import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL/SKIP line per acceptance criterion."""

    def record(number: int, ok: bool | None, detail: str) -> None:
        verdict = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        _ACCEPTANCE_LINES.append(f"criterion {number}: {verdict}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
