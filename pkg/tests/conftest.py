import numpy as np
import pytest

from relax_eisner.oracle import oracle_best

_criteria: dict[int, tuple[str, list[str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = getattr(report, "_criterion", None)
    if crit is None:
        return
    number, title = crit
    _criteria.setdefault(number, (title, []))[1].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report._criterion = (marker.args[0], marker.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, outcomes = _criteria[number]
        status = "PASS" if outcomes and all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title}")


def random_weights(rng, n, scale=1.0):
    return scale * rng.standard_normal((n + 1, n + 1))


def tie_free_weights(rng, n, scale=1.0):
    while True:
        w = random_weights(rng, n, scale)
        if not oracle_best(w).tied:
            return w


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
