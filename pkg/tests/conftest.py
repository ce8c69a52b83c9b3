import sys

import pytest

from ewishart import zonal


@pytest.fixture(scope="session", autouse=True)
def isolated_zonal_store(tmp_path_factory):
    """Keep the on-disk zonal cache of the test run in a temporary directory."""
    store = zonal.ZonalStore(tmp_path_factory.mktemp("zonal-cache"))
    zonal.set_store(store)
    yield store
    zonal.set_store(None)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
