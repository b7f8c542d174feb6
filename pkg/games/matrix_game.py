from dataclasses import dataclass
from typing import Tuple

import numpy as np

from games.simplex import simplex_method
from utils.errors import GameShapeError

# mixed-strategy entries below this are LP noise
PROB_FLOOR = 1e-13


@dataclass(frozen=True)
class MatrixGameSolution:
    """Mixed value of a zero-sum matrix game; the row player minimizes."""
    value: float
    optimal_row_mixed: np.ndarray
    optimal_col_mixed: np.ndarray


def as_payoff_matrix(A) -> np.ndarray:
    if isinstance(A, np.ndarray):
        matrix = A.astype(np.float64)
    else:
        rows = [list(r) for r in A]
        if not rows or len({len(r) for r in rows}) != 1:
            raise GameShapeError('payoff matrix must be non-empty and rectangular')
        matrix = np.asarray(rows, dtype=np.float64)
    if matrix.ndim != 2 or matrix.size == 0:
        raise GameShapeError(f'payoff matrix must be a non-empty 2-D array, got shape {matrix.shape}')
    if not np.all(np.isfinite(matrix)):
        raise GameShapeError('payoff matrix has non-finite entries')
    return matrix


def clean_mixed(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, None)
    p[p < PROB_FLOOR] = 0.0
    return p / p.sum()


def pure_bounds(A) -> Tuple[float, float]:
    """(min_u max_v A, max_v min_u A)."""
    A = as_payoff_matrix(A)
    return float(A.max(axis=1).min()), float(A.min(axis=0).max())


def matrix_game_value(A) -> MatrixGameSolution:
    A = as_payoff_matrix(A)
    n_rows, n_cols = A.shape
    shift = A.min() - 1.0
    B = A - shift
    # rows: x = p / v with B^T x <= 1, maximize sum(x); columns come out as duals
    lp = simplex_method(
        np.concatenate([-np.ones(n_rows), np.zeros(n_cols)]),
        np.hstack([B.T, np.eye(n_cols)]),
        np.ones(n_cols),
    )
    total = lp.x[:n_rows].sum()
    return MatrixGameSolution(
        value=float(1.0 / total + shift),
        optimal_row_mixed=clean_mixed(lp.x[:n_rows]),
        optimal_col_mixed=clean_mixed(-lp.duals),
    )
