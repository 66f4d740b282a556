import numpy as np
import pytest

from clid.corpus import Language, LabeledCorpus, LabeledSample
from clid.synthetic import generate_synthetic


def make_corpus(rows):
    """``rows``: iterable of (label, text)."""
    return LabeledCorpus(
        tuple(LabeledSample(t, Language.parse(l), f"t:{i}") for i, (l, t) in enumerate(rows))
    )


@pytest.fixture(scope="session")
def small_synthetic():
    return generate_synthetic(seed=7, per_class=60)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> None:
    """Log one acceptance line and fail the calling test when ``ok`` is false."""
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
