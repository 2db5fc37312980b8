import pytest

from rosenblatt_lrd.domains import Interval
from rosenblatt_lrd.rosenblatt import RosenblattSpec, build_spec


@pytest.fixture(scope="session")
def unit_interval():
    return Interval(0.0, 1.0)


@pytest.fixture(scope="session")
def spec_quarter(unit_interval):
    """Limit law for D = [0, 1], alpha = 0.25 at the default truncation."""
    return build_spec(unit_interval, 0.25, resolution=2000, K=200)


@pytest.fixture(scope="session")
def spec_030(unit_interval):
    return build_spec(unit_interval, 0.3, resolution=2000, K=200)


@pytest.fixture
def toy_spec():
    return RosenblattSpec(1, 0.25, None, [0.3, 0.1], 0.0)
