import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from besovlab import ExpCusp, Power, PowerLog, RadialWeight

# derandomized so reruns see the same examples
settings.register_profile("repo", deadline=None, derandomize=True, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def battery():
    """Line densities used across the suite, keyed by a readable label."""
    return {
        "power_-0.5": Power(-0.5),
        "power_0": Power(0.0),
        "power_1": Power(1.0),
        "power_2.5": Power(2.5),
        "powerlog_1_1": PowerLog(1.0, 1.0),
        "powerlog_0_-1": PowerLog(0.0, -1.0),
        "ball2_unit": RadialWeight(2, Power(0.0)).to_line_density(),
        "expcusp_0": ExpCusp(0.0),
    }


@pytest.fixture(scope="session")
def weights():
    return battery()


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.max(np.abs(a - b) / np.abs(b))


# acceptance lines, echoed after the run so they survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
