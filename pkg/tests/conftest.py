import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rlcfr.games import build_game  # noqa: E402


@pytest.fixture(scope="session")
def kuhn():
    return build_game("kuhn")


@pytest.fixture(scope="session")
def leduc():
    return build_game("leduc")


@pytest.fixture(scope="session")
def royal():
    return build_game("royal")


def pytest_addoption(parser):
    parser.addoption("--nightly", action="store_true", help="also run the hours-scale training criteria")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--nightly"):
        return
    skip = pytest.mark.skip(reason="hours-scale; run with --nightly")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import NIGHTLY, RESULTS, TITLES

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in TITLES.items():
        note = "nightly only, pass --nightly" if n in NIGHTLY else "deselected"
        status, _, detail = RESULTS.get(n, ("NOT RUN", title, note))
        terminalreporter.write_line(f"criterion {n} [{status}] {title}: {detail}")
