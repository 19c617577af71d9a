"""Shared fixtures for the opendyn test suite."""

import numpy as np
import pytest

from opendyn.bath import OhmicBath
from opendyn.operators import TimeDependentHamiltonian, pauli_string
from opendyn.utils.tracer import get_tracer


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running physics checks (still run by default)")


@pytest.fixture(autouse=True)
def fresh_tracer():
    """Every test starts with an empty run trace."""
    yield get_tracer(reset=True)


@pytest.fixture
def ohmic_bath():
    """Weak Ohmic bath: ηg² = 1e-4, f_c = 4 GHz, T = 16 mK."""
    return OhmicBath.from_physical(1e-4, 4.0, 16.0)


@pytest.fixture
def rabi_hamiltonian():
    """H = σˣ/2 in angular units."""
    return TimeDependentHamiltonian.constant(0.5 * pauli_string("X"), angular=True)


@pytest.fixture
def ket0():
    return np.array([1.0, 0.0], dtype=complex)


@pytest.fixture
def ket1():
    return np.array([0.0, 1.0], dtype=complex)
