import numpy as np
import pytest

from vortexlab.geometry import Disk, Rectangle
from vortexlab.profile_gamma import solve_profile


@pytest.fixture(scope="session")
def unit_disk():
    return Disk((0.0, 0.0), 1.0)


@pytest.fixture(scope="session")
def square2():
    """The PDE workhorse domain [-1, 1]^2."""
    return Rectangle((-1.0, -1.0), 2.0, 2.0)


@pytest.fixture(scope="session")
def profile_cache():
    cache = {}

    def get(g, R=200.0, mesh=2048):
        key = (g, R, mesh)
        if key not in cache:
            cache[key] = solve_profile(g, R, mesh=mesh)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def prof05(profile_cache):
    return profile_cache(0.5)
