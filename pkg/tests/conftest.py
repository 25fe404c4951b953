import pytest

_RESULTS = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance(pytestconfig):
    """Criterion number -> (passed, detail), printed after the run."""
    return pytestconfig.stash.setdefault(_RESULTS, {})


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        ok, detail = results[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
