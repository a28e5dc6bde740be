import numpy as np
import pytest

from marginlab.classes import ClassSpec, plan_parameters

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    ok = call.excinfo is None
    prev = _ACCEPTANCE.get(number, (title, True, ""))
    extra = getattr(item, "acceptance_note", "")
    _ACCEPTANCE[number] = (title, prev[1] and ok, extra or prev[2])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, note = _ACCEPTANCE[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}"
        if note:
            line += f"  ({note})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def holder4():
    return plan_parameters(ClassSpec.holder(), 2, 4)


@pytest.fixture(scope="session")
def convex8():
    return plan_parameters(ClassSpec.convex(), 2, 8)


@pytest.fixture(scope="session")
def barron64():
    return plan_parameters(ClassSpec.barron(1.0), 2, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
