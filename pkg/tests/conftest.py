import pytest

import gwmaxdeg as g


@pytest.fixture(scope="session")
def geometric13():
    return g.GeometricLaw(1 / 3)


@pytest.fixture(scope="session")
def poisson1():
    return g.PoissonLaw(1.0)


@pytest.fixture(scope="session")
def powerlaw():
    return g.PowerLawLaw(0.5, 4.0)


@pytest.fixture(scope="session")
def binary():
    # two-point critical law: leaves or binary branching
    return g.ExplicitLaw([0.5, 0, 0.5])


@pytest.fixture(scope="session")
def geo013():
    # geometric(1/3) restricted to support {0, 1, 3} and renormalized
    return g.ExplicitLaw([27 / 37, 9 / 37, 0, 1 / 37])


@pytest.fixture(scope="session")
def test_laws(geometric13, poisson1, powerlaw, binary):
    return [geometric13, poisson1, powerlaw, binary]


@pytest.fixture(scope="session")
def geo_table(geometric13):
    return g.MaxDegTable(geometric13, 80)


@pytest.fixture(scope="session")
def poi_table(poisson1):
    return g.MaxDegTable(poisson1, 40)
