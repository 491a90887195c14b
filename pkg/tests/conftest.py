import pytest

from resonant_nls.amplitudes import solve_amplitudes
from resonant_nls.modesets import ModeSet
from resonant_nls.solver import newton_solve


@pytest.fixture(scope="session")
def one_mode():
    return solve_amplitudes(ModeSet.single(1))


@pytest.fixture(scope="session")
def pair78():
    return solve_amplitudes(ModeSet((7, 8)))


@pytest.fixture(scope="session")
def newton_one_mode():
    """Newton solutions for m0 = 1 keyed by eps."""
    return {eps: newton_solve(None, ModeSet.single(1), eps) for eps in (1e-3, 2e-3)}


@pytest.fixture(scope="session")
def newton_78():
    return newton_solve(None, ModeSet((7, 8)), 1e-3)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split()[0])):
            terminalreporter.write_line(line)
