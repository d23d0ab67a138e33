import pytest

# acceptance lines collected by tests/test_acceptance.py: {criterion number: (passed, message)}
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {msg}")


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(20240601)
