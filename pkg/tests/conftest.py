import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def doubling_tiling():
    from schmidt_games.dynamics import doubling
    from schmidt_games.tilings import TilingFamily, certify_tiling

    t = TilingFamily(doubling(), 0.1, 0)
    certify_tiling(t, 12)
    return t


# one summary line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
