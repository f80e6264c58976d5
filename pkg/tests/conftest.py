import pytest

from triebias.synth import BONHAM_WORDS, bonham_model, bonham_vocab
from triebias.trie import build_trie

ACCEPTANCE_RESULTS = []


@pytest.fixture
def bonham():
    v = bonham_vocab()
    return v, bonham_model(), build_trie(v, BONHAM_WORDS)


@pytest.fixture
def record_criterion():
    """Record one acceptance line; printed in the terminal summary."""
    def record(name, passed, detail=""):
        ACCEPTANCE_RESULTS.append((name, passed, detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
