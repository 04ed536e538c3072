import re

import pytest

_criteria: dict[int, str] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[k] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        terminalreporter.write_line(f"criterion {k:2d}: {_criteria[k]}")


@pytest.fixture
def k5_plus_isolated():
    from colorembed.graphs import Graph, GraphFamily

    edges = [(u, v) for u in range(5) for v in range(u + 1, 5)]
    return GraphFamily((Graph.from_edges(6, edges),))
