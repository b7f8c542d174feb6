from .lattice import BeliefLattice
from .partition import Partition
from .value_solver import (
    ValueSolver,
    ValueTable,
    convergence_study,
    non_revealing_value,
    solve_value,
    vex_on_lattice,
)
from .vex import LatticeSplit, lower_envelope

__all__ = [
    'BeliefLattice',
    'LatticeSplit',
    'Partition',
    'ValueSolver',
    'ValueTable',
    'convergence_study',
    'lower_envelope',
    'non_revealing_value',
    'solve_value',
    'vex_on_lattice',
]
