from __future__ import annotations

import time

import pytest
from hypothesis import HealthCheck, settings

from ionbound import simulate
from ionbound.scenario import preset

settings.register_profile(
    "ionbound", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ionbound")


def _timed(spec):
    t0 = time.perf_counter()
    res = simulate.run(spec)
    res.extras["wall_seconds"] = time.perf_counter() - t0
    return res


@pytest.fixture(scope="session")
def bound_run():
    return _timed(preset("vlasov-bound"))


@pytest.fixture(scope="session")
def bound_coarse_run():
    return _timed(preset("vlasov-bound").with_overrides(T_final=50.0).refined(-1))


@pytest.fixture(scope="session")
def overfilled_run():
    return _timed(preset("vlasov-overfilled"))


@pytest.fixture(scope="session")
def static_run():
    return _timed(preset("tf-static"))


@pytest.fixture(scope="session")
def breather_run():
    return _timed(preset("tf-breather"))


@pytest.fixture(scope="session")
def all_runs(bound_run, overfilled_run, static_run, breather_run):
    return {"vlasov-bound": bound_run, "vlasov-overfilled": overfilled_run,
            "tf-static": static_run, "tf-breather": breather_run}


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
