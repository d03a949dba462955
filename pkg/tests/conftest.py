import pytest

from eaco import ConstructionGraph

_criteria: list[tuple[str, str, str]] = []


@pytest.fixture
def unit_square():
    return ConstructionGraph.from_coords([(0, 0), (1, 0), (1, 1), (0, 1)])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = dict(item.user_properties).get("detail", "")
        status = "PASS" if report.passed else "FAIL"
        _criteria.append((marker.args[0], status, detail))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(_criteria, key=lambda c: int(c[0].split()[0][2:])):
        terminalreporter.write_line(f"{status}  {name}" + (f"  [{detail}]" if detail else ""))
