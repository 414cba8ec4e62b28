import numpy as np
import pytest

from contmeas import load_preset

# Worker count used by the heavyweight ensemble tests.  Results are bitwise
# independent of this, so it only affects wall time.
WORKERS = 4


@pytest.fixture(scope="session")
def decoupled():
    return load_preset("decoupled")


@pytest.fixture(scope="session")
def informationless():
    return load_preset("informationless-jumps")


@pytest.fixture(scope="session")
def diffusive_qubit():
    return load_preset("diffusive-qubit")


@pytest.fixture(scope="session")
def counting_qubit():
    return load_preset("counting-qubit")


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


MIXED = np.eye(2, dtype=complex) / 2
PLUS = np.full((2, 2), 0.5, dtype=complex)
GROUND = np.diag([0.0, 1.0]).astype(complex)
EXCITED = np.diag([1.0, 0.0]).astype(complex)
