from __future__ import annotations

import pytest

from crowdmatch import _core

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=sorted(_core.BACKENDS))
def backend(request):
    """Run the test once per available kernel backend."""
    prev = _core.BACKEND
    _core.use_backend(request.param)
    yield request.param
    _core.use_backend(prev)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
