import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from seqmeas.lattice import Lattice  # noqa: E402


@pytest.fixture(scope="session")
def lattice():
    return Lattice.centered(512, 10.0)


@pytest.fixture(scope="session")
def fine_lattice():
    return Lattice.centered(1024, 12.0)
