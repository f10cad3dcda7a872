import shutil

import pytest

from compactse.corpus import bundled
from compactse.smt import Solver, SolverConfig


@pytest.fixture(scope="session", autouse=True)
def _need_solver():
    if shutil.which("z3") is None:
        pytest.exit("the z3 executable is required to run the tests", returncode=1)


@pytest.fixture(scope="session")
def solver():
    return Solver(SolverConfig())


@pytest.fixture
def fresh_solver():
    return Solver(SolverConfig())


@pytest.fixture(scope="session")
def linsrch():
    return bundled("linsrch")


# one pass/fail line per acceptance criterion in the terminal summary
_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    failed = rep.failed or (rep.when == "call" and rep.skipped)
    if rep.when == "call" or failed:
        prev = _criteria.get(n, (title, True))
        _criteria[n] = (title, prev[1] and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, ok = _criteria[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {title}")
