import numpy as np
import pytest

from revspec.geometry import make_profile


@pytest.fixture(scope="session")
def sphere():
    return make_profile("sphere")


@pytest.fixture(scope="session")
def b02():
    return make_profile("deformed-sphere", (0.2,))


@pytest.fixture(scope="session")
def bm02():
    return make_profile("deformed-sphere", (-0.2,))


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)
