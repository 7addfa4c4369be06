import numpy as np
import pytest

from kahlerlag.kahler_core import flat_model, projective_model
from kahlerlag.submanifold import clifford_torus, equator, orbit_torus


@pytest.fixture(scope="session")
def cp1():
    return projective_model(1)


@pytest.fixture(scope="session")
def cp2():
    return projective_model(2)


@pytest.fixture(scope="session")
def cp2_unit():
    return projective_model(2, "unit")


@pytest.fixture(scope="session")
def flat1():
    return flat_model(1)


@pytest.fixture(scope="session")
def flat2():
    return flat_model(2)


@pytest.fixture(scope="session")
def clifford(cp2):
    return clifford_torus(cp2)


@pytest.fixture(scope="session")
def eq(cp1):
    return equator(cp1)


@pytest.fixture(scope="session")
def weighted(cp2):
    return orbit_torus(cp2, (0.5, 0.25, 0.25))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
