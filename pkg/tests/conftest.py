import pytest
from hypothesis import settings

settings.register_profile("lab", max_examples=60, deadline=None)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def small_odd_primes():
    return [3, 5, 7, 11, 13]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
