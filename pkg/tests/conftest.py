import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ipromp.demos import generate_nominals
from ipromp.promp import learn_segments

settings.register_profile("ci", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {name}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def demos_1s():
    return generate_nominals()


@pytest.fixture(scope="session")
def demos_2s():
    return generate_nominals(T=2.0)


@pytest.fixture(scope="session")
def segment_models(demos_2s):
    return learn_segments(demos_2s)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
