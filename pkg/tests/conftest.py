import random

import pytest

from constyle import synthetic
from constyle.style_classifier import train_classifier

# pass/fail lines recorded by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synthetic_task():
    return synthetic.build_task(seed=0)


@pytest.fixture(scope="session")
def toy_classifier(synthetic_task):
    """Formality classifier trained on the synthetic parallel corpus."""
    rng = random.Random(123)
    formal = synthetic.formal_sentences(600, seed=7)
    informal = [synthetic.corrupt(s, rng, synthetic_task.spelling,
                                  synthetic_task.abbrev) for s in formal]
    return train_classifier(informal, formal, epochs=30, lr=3.0, seed=0)
