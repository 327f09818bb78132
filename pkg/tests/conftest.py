import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fronttrack.system import IsentropicEuler, StateBox, SystemParams

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def euler():
    return IsentropicEuler()


@pytest.fixture(scope="session")
def small_euler():
    """Box used by the finite-volume comparisons; keeps lambda_hat moderate."""
    return IsentropicEuler(SystemParams(state_box=StateBox(0.5, 2.0, 1.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
