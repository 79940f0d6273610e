from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
JATS = DATA / "jats"
FIXTURE = DATA / "fixture"


@pytest.fixture
def jats_bytes():
    return lambda name: (JATS / name).read_bytes()


@pytest.fixture
def policy_table():
    from dascite.ingest import JournalPolicyTable

    return JournalPolicyTable.from_csv(JATS / "journals.csv")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
