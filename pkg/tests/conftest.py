import numpy as np
import pytest

from dpnash.harness import load_config

# lines collected by the acceptance module, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ieee_cfg():
    return load_config("ieee30-6p")


@pytest.fixture(scope="session")
def ieee_spec(ieee_cfg):
    return ieee_cfg.game_spec()


@pytest.fixture(scope="session")
def fig1(ieee_cfg):
    return ieee_cfg.graph_schedule()


@pytest.fixture(scope="session")
def sched6(ieee_cfg):
    return ieee_cfg.schedule_set()


@pytest.fixture(scope="session")
def damped_cfg():
    return load_config("ieee30-6p-damped")


@pytest.fixture(scope="session")
def published_ne():
    return np.array([1.9932, 4.9526, 7.8629, 11.6692, 14.4304, 17.2964])
