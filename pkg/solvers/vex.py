import itertools
import logging
from dataclasses import dataclass

import numpy as np

from games.simplex import simplex_method
from utils.errors import Infeasible

logger = logging.getLogger(__name__)

CONTACT_TOL = 1e-9
RESIDUAL_TOL = 1e-10
WEIGHT_FLOOR = -1e-12
MAX_SUBSETS = 20_000


@dataclass(frozen=True)
class LatticeSplit:
    """Convex combination of lattice points: ``sum_k weights[k] * points[atom_ids[k]]``."""
    weights: np.ndarray
    atom_ids: np.ndarray

    @property
    def trivial(self) -> bool:
        return len(self.atom_ids) == 1


def _solve_subset(points: np.ndarray, subset, query: np.ndarray):
    P = points[list(subset)].T
    weights, *_ = np.linalg.lstsq(P, query, rcond=None)
    if np.abs(P @ weights - query).max() > RESIDUAL_TOL or weights.min() < WEIGHT_FLOOR:
        return None
    weights = np.clip(weights, 0.0, None)
    return weights / weights.sum()


def lower_envelope(points: np.ndarray, g: np.ndarray, query: np.ndarray):
    """Lower convex envelope of the graph {(points[k], g[k])} at ``query``.

    Solves ``min g.lam  s.t.  points^T lam = query, lam >= 0``; the coordinate
    rows sum to the simplex constraint.  Among optimal combinations the one
    with the fewest atoms, then the lexicographically smallest ids, is kept.
    Returns ``(value, LatticeSplit)``.
    """
    points = np.asarray(points, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    try:
        lp = simplex_method(g, points.T, query)
    except Infeasible as err:
        raise Infeasible(f'query {query} outside the lattice hull: {err}') from err

    # supporting affine function y.p touches the envelope at the contact points
    gap = g - points @ lp.duals
    contact = np.flatnonzero(gap <= CONTACT_TOL * (1.0 + np.abs(g).max()))
    split = None
    n_tried = 0
    for size in range(1, points.shape[1] + 1):
        for subset in itertools.combinations(contact, size):
            n_tried += 1
            if n_tried > MAX_SUBSETS:
                break
            weights = _solve_subset(points, subset, query)
            if weights is not None:
                split = LatticeSplit(weights, np.asarray(subset, dtype=int))
                break
        if split is not None or n_tried > MAX_SUBSETS:
            break

    if split is None:
        logger.debug(f'vex: {len(contact)} contact points, falling back to the LP basis')
        support = lp.basis[lp.x[lp.basis] > 0]
        support = np.sort(support) if len(support) else lp.basis[:1]
        weights = lp.x[support] / lp.x[support].sum()
        split = LatticeSplit(weights, support.astype(int))

    value = float(split.weights @ g[split.atom_ids])
    return value, split
