import os

import pytest
from hypothesis import HealthCheck, settings

from hopcroft_lab.geom import Instance, Line2, PointD

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# lines 1: y = x, 2: y = -x + 2, 3: y = 3
L3 = [Line2(1, 1, 0), Line2(2, -1, 2), Line2(3, 0, 3)]


@pytest.fixture
def l3():
    return list(L3)


def l3_instance(*points):
    return Instance(2, list(L3), [PointD(*p) for p in points], seed=0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
