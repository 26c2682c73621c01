import numpy as np
import pytest

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def rng():
    return np.random.default_rng(20010301)


@pytest.fixture
def acceptance(request):
    """Record one verdict line per acceptance criterion for the terminal summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})
    number = request.node.get_closest_marker("acceptance").args[0]

    def unfinished():
        if number not in store:
            store[number] = f"criterion {number:2d} FAIL (did not complete): {request.node.name}"

    request.addfinalizer(unfinished)

    def record(title: str, checks: dict):
        failed = [name for name, ok in checks.items() if not ok]
        verdict = "PASS" if not failed else "FAIL (" + ", ".join(failed) + ")"
        line = f"criterion {number:2d} {verdict}: {title}"
        store[number] = line
        print(line)
        return not failed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        terminalreporter.write_line(store[number])
