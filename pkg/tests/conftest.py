from functools import lru_cache
from pathlib import Path

import pytest

from lielin.clifront import load_problem, run_linearize
from lielin.linearizer import analyze

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "lielin" / "fixtures"
SCHEMA = Path(__file__).resolve().parents[1] / "docs" / "report.schema.json"


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.lie"


@lru_cache(maxsize=None)
def problem(name: str, **overrides):
    return load_problem(fixture_path(name), overrides or None)


@lru_cache(maxsize=None)
def analysis(name: str):
    p = problem(name)
    return analyze(p.fields, p.order, p.params, 0, p.labels, p.extension)


@lru_cache(maxsize=None)
def linearized(name: str):
    return run_linearize(problem(name))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# --- acceptance summary ----------------------------------------------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n, title = mark.args
    _criteria[n] = (title, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, verdict = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {verdict}  {title}")
