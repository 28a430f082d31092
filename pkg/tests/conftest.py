import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

KAPPAS = (4.2, 4.8, 16.0 / 3.0, 6.0, 7.0, 7.8)


@pytest.fixture(params=KAPPAS, ids=lambda k: f"kappa={k:.4g}")
def kappa(request):
    return request.param


# one line per acceptance criterion, echoed after the run so it shows without -s
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
