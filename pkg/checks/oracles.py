import itertools
import logging
from typing import Sequence

import numpy as np
import scipy.optimize

from games.matrix_game import as_payoff_matrix
from measures import GridMeasure
from utils.errors import GameShapeError, GridMismatchError, Infeasible

logger = logging.getLogger(__name__)

# equilibrium conditions are accepted up to this much rounding
ENUMERATION_TOL = 1e-10


def transport_cost_lp(m: GridMeasure, m2: GridMeasure, power: int = 1) -> float:
    """min over couplings of sum pi_ij |x_i - y_j|^power, solved as a transport LP.

    Only the supports enter the program, so a pair of 6-atom measures is a 36-variable LP.
    """
    if m.grid != m2.grid:
        raise GridMismatchError(f'measures live on different grids: {m.grid} vs {m2.grid}')
    xs, ys = m.support, m2.support
    p, q = m.weights[xs], m2.weights[ys]
    nodes = m.grid.nodes
    cost = np.abs(nodes[xs][:, None] - nodes[ys][None, :]) ** power
    n, k = cost.shape
    # row sums give p, column sums give q; one constraint is redundant
    A_eq = np.vstack([np.kron(np.eye(n), np.ones(k)), np.kron(np.ones(n), np.eye(k))])[:-1]
    b_eq = np.concatenate([p, q])[:-1]
    res = scipy.optimize.linprog(cost.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method='highs')
    if res.status != 0:
        raise Infeasible(f'transport LP failed: {res.message}')
    return float(res.fun)


def wasserstein_lp(m: GridMeasure, m2: GridMeasure, p: int = 1) -> float:
    return transport_cost_lp(m, m2, p) ** (1.0 / p)


def _square_equilibrium(A: np.ndarray, rows, cols):
    """Mixes on (rows, cols) equalizing the opponent's payoffs, or None if singular."""
    k = len(rows)
    sub = A[np.ix_(rows, cols)]
    bordered = np.zeros((k + 1, k + 1))
    bordered[:k, :k] = sub.T
    bordered[:k, k] = -1.0
    bordered[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        x = np.linalg.solve(bordered, rhs)
        bordered[:k, :k] = sub
        y = np.linalg.solve(bordered, rhs)
    except np.linalg.LinAlgError:
        return None
    return x[:k], y[:k], x[k]


def support_enumeration_value(A) -> float:
    """Mixed value of a zero-sum game (row player minimizes) by trying equal-size supports.

    Exact for nondegenerate games, which random continuous entries are almost surely.
    """
    A = as_payoff_matrix(A)
    n_rows, n_cols = A.shape
    for k in range(1, min(n_rows, n_cols) + 1):
        for rows in itertools.combinations(range(n_rows), k):
            for cols in itertools.combinations(range(n_cols), k):
                found = _square_equilibrium(A, list(rows), list(cols))
                if found is None:
                    continue
                x_sub, y_sub, value = found
                if x_sub.min() < -ENUMERATION_TOL or y_sub.min() < -ENUMERATION_TOL:
                    continue
                x = np.zeros(n_rows)
                y = np.zeros(n_cols)
                x[list(rows)] = x_sub
                y[list(cols)] = y_sub
                # the minimizer cannot gain by another row, nor the maximizer by another column
                if (A @ y).min() < value - ENUMERATION_TOL or (x @ A).max() > value + ENUMERATION_TOL:
                    continue
                return float(value)
    raise GameShapeError(f'no equilibrium found by support enumeration for a degenerate {A.shape} game')


def pairwise_envelope(xs: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Lower convex envelope of g over the points xs, trying every two-point split."""
    xs = np.asarray(xs, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    out = g.copy()
    for i, j in itertools.permutations(range(len(xs)), 2):
        if not xs[i] < xs[j]:
            continue
        inside = (xs >= xs[i]) & (xs <= xs[j])
        lam = (xs[inside] - xs[i]) / (xs[j] - xs[i])
        out[inside] = np.minimum(out[inside], (1.0 - lam) * g[i] + lam * g[j])
    return out


def pairwise_value_recursion(xs: np.ndarray, stage_costs: Sequence[np.ndarray]) -> np.ndarray:
    """Backward recursion V[q] = envelope(stage_costs[q] + V[q+1]) by enumerating splits; V[N] = 0."""
    n_steps = len(stage_costs)
    values = np.zeros((n_steps + 1, len(xs)))
    for q in range(n_steps - 1, -1, -1):
        values[q] = pairwise_envelope(xs, stage_costs[q] + values[q + 1])
    return values
