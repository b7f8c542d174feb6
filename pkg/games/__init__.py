from .hamiltonian import (
    hamiltonian_value,
    isaacs_gap,
    lipschitz_probe,
    payoff_matrix,
    time_lipschitz_probe,
)
from .matrix_game import MatrixGameSolution, matrix_game_value, pure_bounds
from .simplex import LinearProgramResult, simplex_method

__all__ = [
    'LinearProgramResult',
    'MatrixGameSolution',
    'hamiltonian_value',
    'isaacs_gap',
    'lipschitz_probe',
    'matrix_game_value',
    'payoff_matrix',
    'pure_bounds',
    'simplex_method',
    'time_lipschitz_probe',
]
