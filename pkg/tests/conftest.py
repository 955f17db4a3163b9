import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hlwnet.snapshot import NetworkConfig, random_snapshot

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def net():
    return NetworkConfig()


@pytest.fixture
def snap20(net):
    return random_snapshot(net, 20, 11)


def random_capacities(rng, n_aps, n_users, lo=1e6, hi=5e8):
    return rng.uniform(lo, hi, size=(n_aps, n_users))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
