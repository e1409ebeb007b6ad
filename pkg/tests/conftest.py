import os
import tempfile

import pytest
from hypothesis import HealthCheck, settings

# keep the ground-state cache out of the user's home during tests
os.environ.setdefault("INLS_LAB_CACHE", tempfile.mkdtemp(prefix="inls-lab-test-cache-"))

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

from inls_lab.domain import make_coefficient, make_domain  # noqa: E402
from inls_lab.groundstate import solve_ground_state  # noqa: E402


@pytest.fixture(scope="session")
def dom1():
    """N = 1, b = 0.5 on a moderate grid."""
    return make_domain(1, 0.5, 20.0, 2048)


@pytest.fixture(scope="session")
def gs1(dom1):
    return solve_ground_state(1.0, dom1)


@pytest.fixture(scope="session")
def dom_quintic():
    return make_domain(1, 0.0, 20.0, 4096)


@pytest.fixture(scope="session")
def gs_quintic(dom_quintic):
    return solve_ground_state(1.0, dom_quintic)


@pytest.fixture(scope="session")
def dom2():
    return make_domain(2, 0.5, 20.0, 2048)


@pytest.fixture(scope="session")
def gs2(dom2):
    return solve_ground_state(1.0, dom2)


@pytest.fixture(scope="session")
def const1(dom1):
    return make_coefficient("constant", dom1)


@pytest.fixture(scope="session")
def gauss1(dom1):
    return make_coefficient("gaussian", dom1, a=4.0)


# -- acceptance report ----------------------------------------------------------

ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k[1:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
