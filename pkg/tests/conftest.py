from itertools import product
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def brute_k1(d, points):
    """Literal double sum over all ordered index pairs."""
    return sum(d(p, q) for p, q in product(points, repeat=2))


def brute_k2(d, points):
    """Largest base distance over ordered pairs r != s."""
    n = len(points)
    return max(d(points[r], points[s]) for r in range(n) for s in range(n) if r != s)


@pytest.fixture
def five_state_path():
    return FIXTURES / "dp_five_state.toml"


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record a one-line verdict for an acceptance criterion."""

    def record(number, ok, detail):
        _ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
