"""
Shared fixtures for the netred test suite.
"""

import numpy as np
import pytest

from netred import fixtures
from netred.models import StateSpace


@pytest.fixture
def example1():
    """Five-vertex single-integrator network."""
    return fixtures.example1()


@pytest.fixture
def six_node():
    """Six-vertex network driven at vertex 3 and observed at vertex 4."""
    return fixtures.six_node()


@pytest.fixture
def star_net():
    """Star K1,3 driven at a leaf."""
    return fixtures.star_network()


@pytest.fixture
def rng():
    """Seeded generator so randomized tests are reproducible."""
    return np.random.default_rng(20241019)


@pytest.fixture
def passive_agent():
    """Two-state agent with A + A' < 0 and C = B'."""
    A = np.array([[-1.0, 1.0], [-1.0, -2.0]])
    B = np.array([[1.0], [0.5]])
    return StateSpace(A, B, B.T)
