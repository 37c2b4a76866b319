import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")

TOY_CORPUS = [("das haus", "the house"), ("das buch", "the book"), ("ein buch", "a book")]


@pytest.fixture
def toy_pairs():
    from bitextmine.ingest.io import preprocess_pairs
    return preprocess_pairs(TOY_CORPUS)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE = []


def record_acceptance(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
