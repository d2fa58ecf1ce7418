import pytest

from quarticlab.surface import build_three_line_quartic
from quarticlab.weierstrass import cached_family


@pytest.fixture(scope="session")
def sample():
    return build_three_line_quartic(1, 3)


@pytest.fixture(scope="session")
def fam1(sample):
    return cached_family(sample, "L1")


@pytest.fixture(scope="session")
def fam2(sample):
    return cached_family(sample, "L2")
