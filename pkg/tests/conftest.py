import pytest

from helpers import CountingOracle, capitals_world
from relinduce.oracle.fixture import FixtureOracle


@pytest.fixture
def world():
    return capitals_world()


@pytest.fixture
def oracle(world):
    return FixtureOracle(world)


@pytest.fixture
def counting(oracle):
    return CountingOracle(oracle)
