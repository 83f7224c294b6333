import numpy as np
import pytest

from cohvortex.coherence import Axis, grid, step_mixture

K = 1.0
V_RATIO = 0.99
Q = float(np.sqrt(1.0 - 0.99))


@pytest.fixture(scope="session")
def step_ensemble():
    return step_mixture(K, V_RATIO)


@pytest.fixture(scope="session")
def fig5_axes():
    return Axis(-15.0, -0.01, 1500), Axis(0.01, 15.0, 1500)


@pytest.fixture(scope="session")
def fig5_field(step_ensemble, fig5_axes):
    return grid(step_ensemble, *fig5_axes)


@pytest.fixture(scope="session")
def small_field(step_ensemble):
    """Coarser map of the same quadrant, still >= 8 samples per shortest period."""
    return grid(step_ensemble, Axis(-15.0, -0.01, 300), Axis(0.01, 15.0, 300))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def report(number, name, passed, detail):
        ACCEPTANCE_LINES.append(f"[{number}] {'PASS' if passed else 'FAIL'}  {name}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        assert passed, detail

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
