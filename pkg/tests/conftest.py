from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from ratnear.curves import Interval, Polynomial

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("repo")


@pytest.fixture
def parabola():
    """x^2 on [-2, 2] with its exact class window."""
    return Polynomial([0, 0, 1]).curve(Interval(Fraction(-2), Fraction(2)), name="x^2", c1=2, c2=2)


@pytest.fixture
def cubic_plus():
    """x^3/3 + x on [0, 1]."""
    return Polynomial([0, 1, 0, Fraction(1, 3)]).curve(Interval(Fraction(0), Fraction(1)), name="x^3/3+x")


_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(_ACCEPTANCE, key=lambda r: int(r[0].split("_")[1])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
