"""Shared fixtures: small pairs and their boundary data."""

import numpy as np
import pytest

from ssf_lab.linop import AccumulativePair
from ssf_lab.pertdet import EpsilonSchedule, boundary_values, default_grid


@pytest.fixture(scope="session")
def rank_one_pair():
    """H0 = 0, V = 1 on a one-dimensional space."""
    return AccumulativePair.from_arrays(np.zeros((1, 1)), np.ones((1, 1)))


@pytest.fixture(scope="session")
def rank_one_data(rank_one_pair):
    """Boundary data of the rank-one pair on the default grid."""
    grid, _ = default_grid(rank_one_pair)
    return boundary_values(rank_one_pair, grid=grid, schedule=EpsilonSchedule.geometric())


@pytest.fixture(scope="session")
def two_level_pair():
    """A 2x2 pair with coupled H0 and a rank-one V."""
    h0 = np.array([[1.0, 0.5], [0.5, -1.0]])
    v = np.array([[1.0, 0.0], [0.0, 0.0]])
    return AccumulativePair.from_arrays(h0, v)


@pytest.fixture(scope="session")
def two_level_data(two_level_pair):
    """Boundary data of the 2x2 pair on the default grid."""
    grid, _ = default_grid(two_level_pair)
    return boundary_values(two_level_pair, grid=grid, schedule=EpsilonSchedule.geometric())
