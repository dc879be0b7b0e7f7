import numpy as np
import pytest

from bddc import build_constraints, poisson_problem, setup_bddc


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_problem():
    return poisson_problem(2, 4)


@pytest.fixture(scope="session")
def small_setup(small_problem):
    p = small_problem
    cons = build_constraints(p.decomposition)
    M = setup_bddc(p.A, p.local_matrices, p.decomposition, cons)
    return p, cons, M


@pytest.fixture(scope="session")
def small_dense(small_setup):
    from oracles import DenseBddc

    p, cons, _ = small_setup
    return DenseBddc(p, cons)


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance_report():
    """Record (and print) the verdict line of one acceptance criterion."""
    def report(number, title, passed, detail):
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
