"""Dense two-phase simplex method with Bland's anti-cycling rule.

Solves ``min c.x  s.t.  A x = b,  x >= 0``.  The tableau keeps ``B^-1 A`` and
``B^-1 b`` for the current basis ``B``; phase 1 starts from an artificial
identity basis, phase 2 re-prices the surviving basis with the true cost.
"""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from utils.errors import Infeasible, Unbounded

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearProgramResult:
    x: np.ndarray
    value: float
    basis: np.ndarray
    duals: np.ndarray
    iterations: int


class SimplexTableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, cost: np.ndarray, basis: List[int], tol: float):
        self.A = np.array(A, dtype=np.float64)
        self.b = np.array(b, dtype=np.float64)
        self.cost = np.asarray(cost, dtype=np.float64)
        self.basis = list(basis)
        self.tol = tol
        self.iterations = 0
        self.reduced = self.cost - self.cost[self.basis] @ self.A

    @property
    def objective(self) -> float:
        return float(self.cost[self.basis] @ self.b)

    def pivot(self, i: int, j: int):
        col = self.A[:, j].copy()
        piv = col[i]
        self.A[i] /= piv
        self.b[i] /= piv
        col[i] = 0.0
        self.A -= np.outer(col, self.A[i])
        self.b -= col * self.b[i]
        self.reduced = self.reduced - self.reduced[j] * self.A[i]
        self.A[:, j] = 0.0
        self.A[i, j] = 1.0
        self.reduced[j] = 0.0
        self.b[np.abs(self.b) < self.tol] = 0.0
        self.basis[i] = j
        self.iterations += 1

    def bland_step(self) -> str:
        entering = np.flatnonzero(self.reduced < -self.tol)
        if not len(entering):
            return 'optimal'
        j = entering[0]
        col = self.A[:, j]
        rows = np.flatnonzero(col > self.tol)
        if not len(rows):
            return 'unbounded'
        ratios = self.b[rows] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + self.tol * (1.0 + abs(best))]
        # lowest basic variable index leaves
        i = ties[np.argmin(np.asarray(self.basis)[ties])]
        self.pivot(i, j)
        return 'go_on'

    def run(self, max_iter: int) -> str:
        for _ in range(max_iter):
            status = self.bland_step()
            if status != 'go_on':
                return status
        raise Infeasible(f'simplex did not terminate within {max_iter} pivots')


def simplex_method(c, A, b, tol: float = 1e-11, max_iter: int = 50_000) -> LinearProgramResult:
    c = np.asarray(c, dtype=np.float64)
    A = np.array(A, dtype=np.float64, ndmin=2)
    b = np.array(b, dtype=np.float64)
    m, n = A.shape
    assert c.shape == (n,) and b.shape == (m,), 'inconsistent LP dimensions'

    flipped = b < 0
    A[flipped] *= -1.0
    b[flipped] *= -1.0

    # Phase 1: minimize the sum of artificial variables
    phase1 = SimplexTableau(
        np.hstack([A, np.eye(m)]), b,
        np.concatenate([np.zeros(n), np.ones(m)]),
        list(range(n, n + m)), tol,
    )
    phase1.run(max_iter)
    if phase1.objective > 1e-9 * max(1.0, b.max(initial=0.0)):
        raise Infeasible(f'infeasible linear program (phase 1 residual {phase1.objective:.3e})')

    # drive remaining artificials out; rows where that fails are redundant
    for i in range(m):
        if phase1.basis[i] >= n:
            candidates = np.flatnonzero(np.abs(phase1.A[i, :n]) > tol)
            if len(candidates):
                phase1.pivot(i, candidates[0])
    keep = [i for i in range(m) if phase1.basis[i] < n]

    phase2 = SimplexTableau(
        phase1.A[keep][:, :n], phase1.b[keep], c,
        [phase1.basis[i] for i in keep], tol,
    )
    if phase2.run(max_iter) == 'unbounded':
        raise Unbounded('unbounded linear program')

    basis = np.asarray(phase2.basis)
    x = np.zeros(n)
    x[basis] = np.clip(phase2.b, 0.0, None)
    duals = np.linalg.lstsq(A[:, basis].T, c[basis], rcond=None)[0]
    duals[flipped] *= -1.0
    logger.debug('simplex: %d + %d pivots, %d redundant rows',
                 phase1.iterations, phase2.iterations, m - len(keep))
    return LinearProgramResult(
        x=x, value=float(c @ x), basis=basis, duals=duals,
        iterations=phase1.iterations + phase2.iterations,
    )
