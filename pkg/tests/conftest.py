import os

import numpy as np
import pytest

from measures import GridMeasure, SpatialGrid
from payoffs import PAYOFF_REGISTRY
from solvers import BeliefLattice, Partition, solve_value

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# a coarse run of the reference experiment; every command finishes in seconds
SMALL_CONFIG = """\
grid.half_width = 4.0
grid.n_points = 65
payoff.name = matching-pennies-x
solve.n_steps = 3
solve.convergence_steps = [2, 3]
lattice.support = [-1.0, 1.0]
lattice.resolution = 4
check.samples = 20
check.n_quad = 16
check.truncation_radius = 3.0
check.heat_pairs = 10
check.games = 20
check.lipschitz_pairs = 20
check.bayes_samples = 20000
play.enumeration_cap = 100000
"""


@pytest.fixture(scope='session')
def grid():
    return SpatialGrid(half_width=4.0, n_points=65)


@pytest.fixture(scope='session')
def pennies():
    return PAYOFF_REGISTRY['matching-pennies-x']()


@pytest.fixture(scope='session')
def pursuit():
    return PAYOFF_REGISTRY['bimodal-pursuit']()


@pytest.fixture(scope='session')
def partition():
    return Partition.uniform(0.0, 1.0, 3)


@pytest.fixture(scope='session')
def lattice(grid):
    return BeliefLattice(grid, [-1.0, 1.0], 4)


@pytest.fixture(scope='session')
def table(pennies, partition, lattice):
    return solve_value(pennies, partition, lattice)


@pytest.fixture(scope='session')
def uniform_id(lattice):
    return lattice.point_id([0.5, 0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(2022)


@pytest.fixture
def two_point(grid):
    return GridMeasure.from_atoms(grid, [-1.0, 1.0], [0.5, 0.5])


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / 'small.cfg'
    path.write_text(SMALL_CONFIG)
    return str(path)
