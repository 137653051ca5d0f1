import numpy as np
import pytest

from expfam_lab import get_family

FAMILY_IDS = ["quadratic", "quadratic:3", "gaussian-variance", "exponential", "gamma:3",
              "full-gaussian-1d", "categorical:3", "categorical:5", "gaussian-cov:2", "gaussian-cov:3"]

# lines printed at the end of the session, one per acceptance criterion
ACCEPTANCE_LINES = []


@pytest.fixture(params=FAMILY_IDS)
def fam(request):
    return get_family(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
