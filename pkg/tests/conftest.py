import math

import numpy as np
import pytest

from app.core.oracle import random_instance
from app.models.chain import ChainParams

HALF_PI = math.pi / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ideal_chain():
    return ChainParams(L=3, m=1.0, J=HALF_PI)


@pytest.fixture
def normal_chain():
    return ChainParams(L=30, m=0.8, J=HALF_PI)


@pytest.fixture
def small_instance(rng):
    """(sys, inst, omega, psi) with two levels, two cells and a 6-dimensional instrument."""
    return random_instance(2, 6, rng)
