import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from halfspace import coeffs, make_grid

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grid32():
    return make_grid(1, 32)


@pytest.fixture(scope="session")
def grid16():
    return make_grid(1, 16)


@pytest.fixture(scope="session")
def herm32(grid32):
    return coeffs.hermitian_sample(grid32, 0)


@pytest.fixture(scope="session")
def general32(grid32):
    return coeffs.random_elliptic_sample(grid32, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def acceptance():
    """Record a criterion line; printed again in the terminal summary."""
    def record(number: int, passed: bool, text: str) -> None:
        line = f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}: {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
