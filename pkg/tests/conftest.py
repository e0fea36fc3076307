import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from iongates.model import SystemParams  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

# Filled by tests/test_acceptance.py, echoed in the terminal summary.
ACCEPTANCE_LINES = []


@pytest.fixture
def paper_params():
    return SystemParams.from_hz()


@pytest.fixture
def small_params():
    """Paper rates on a Fock space small enough for dense oracles."""
    return SystemParams.from_hz(fock_cutoff=2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
