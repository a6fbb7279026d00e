import os
import sys

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from tsetlin_index import ClauseBank, TMConfig  # noqa: E402

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("dev", max_examples=50, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))

# clause ids inside the worked example bank (one class, four clauses)
C1_POS, C2_POS, C1_NEG, C2_NEG = 0, 1, 2, 3
# literal ids for two features
X1, X2, NOT_X1, NOT_X2 = 0, 1, 2, 3


@pytest.fixture
def example_bank():
    """Two features, four clauses: C1+ = C2+ = x1, C1- = C2- = not x1 and x2."""
    bank = ClauseBank(TMConfig(m=1, n=4, o=2))
    for j in (C1_POS, C2_POS):
        bank.set_include(0, j, X1, True)
    for j in (C1_NEG, C2_NEG):
        bank.set_include(0, j, NOT_X1, True)
        bank.set_include(0, j, X2, True)
    return bank


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" in getattr(rep, "nodeid", "") and rep.when == "call":
                lines.append((rep.nodeid.split("::")[-1], "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{status}  {name}")
