import time

import pytest

from wsbflip.assembly import pipeline

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def art6():
    t0 = time.time()
    art = pipeline(6)
    art.engine()
    art.build_seconds = time.time() - t0
    return art


@pytest.fixture(scope="session")
def art12():
    return pipeline(12)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
