import time

import pytest

from cylcycles.cycles import search_cycles
from cylcycles.experiments import harmonic_abs_field

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def harmonic_results():
    """Cycle searches on the field x' = sin t + (eps/2π) cos(kt)|x| for k = 4, 5 (eps = 0.1), computed once."""
    out = {}
    for k in (4, 5):
        F = harmonic_abs_field(k, 0.1)
        out[k] = (F, search_cycles(F, grid=2048))
    return out


@pytest.fixture(scope="session")
def harmonic_timed():
    """Same searches as ``harmonic_results`` but timed from scratch (cold caches per field)."""
    out = {}
    for k in (4, 5):
        start = time.perf_counter()
        F = harmonic_abs_field(k, 0.1)
        res = search_cycles(F, grid=2048)
        out[k] = (F, res, time.perf_counter() - start)
    return out


@pytest.fixture
def acceptance_line():
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
