import os

import pytest
from hypothesis import HealthCheck, settings

from tpmke.curves import TOY

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


class DlogOracle:
    """Discrete logs on the toy subgroup by exhaustive table."""

    def __init__(self, group):
        self.group = group
        self.table = {}
        P = group.identity
        g = group.g
        for k in range(group.q):
            self.table[(P.x, P.y)] = k
            P = P * g

    def __call__(self, P):
        return self.table[(P.x, P.y)]


@pytest.fixture(scope="session")
def dlog():
    return DlogOracle(TOY)
