import os

import pytest

from strided_rul.cmapss import has_subset, prepare
from strided_rul.synthetic import SyntheticSpec, synthetic_subset, write_subset

DATA_ENV = "CMAPSS_DATA_DIR"


def cmapss_dir():
    return os.environ.get(DATA_ENV)


def require_subset(subset):
    """Skip unless the public C-MAPSS files for ``subset`` are available."""
    root = cmapss_dir()
    if not has_subset(root, subset):
        pytest.skip(f"C-MAPSS {subset} not found (set {DATA_ENV} to the directory "
                    f"holding train_{subset}.txt, test_{subset}.txt, RUL_{subset}.txt)")
    return root


SMALL = SyntheticSpec(n_train=20, n_test=12, min_life=40, max_life=90, seed=11)


@pytest.fixture(scope="session")
def small_raw():
    return synthetic_subset(SMALL)


@pytest.fixture(scope="session")
def small_prepared(small_raw):
    return prepare(*small_raw)


@pytest.fixture
def small_data_dir(tmp_path):
    write_subset(tmp_path / "data", "FD001", SMALL)
    return tmp_path / "data"


_acceptance = {}


def pytest_runtest_logreport(report):
    crit = _criteria.get(report.nodeid)
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        reason = ""
        if report.outcome == "skipped" and isinstance(report.longrepr, tuple):
            reason = report.longrepr[2]
        _acceptance[report.nodeid] = (crit, status, reason)


_criteria = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            _criteria[item.nodeid] = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    by_criterion = {}
    for crit, status, reason in _acceptance.values():
        by_criterion.setdefault(crit, []).append((status, reason))
    terminalreporter.section("acceptance criteria")
    for crit in sorted(by_criterion):
        results = by_criterion[crit]
        statuses = {s for s, _ in results}
        if "FAIL" in statuses:
            status = "FAIL"
        elif statuses == {"SKIP"}:
            status = "SKIP"
        else:
            status = "PASS"
        line = f"criterion {crit}: {status} ({len(results)} check(s))"
        reasons = sorted({r for s, r in results if s == "SKIP" and r})
        if reasons:
            line += " - " + "; ".join(r.removeprefix("Skipped: ") for r in reasons)
        terminalreporter.write_line(line)
