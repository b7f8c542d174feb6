import logging
from typing import Optional

import numpy as np

from games.matrix_game import MatrixGameSolution, matrix_game_value, pure_bounds
from measures import GridMeasure, SpatialGrid, random_atomic_measure, wasserstein1
from payoffs.base import PayoffSpec

logger = logging.getLogger(__name__)


def payoff_matrix(spec: PayoffSpec, t: float, m: GridMeasure) -> np.ndarray:
    """A_uv = sum_i w_i f(t, x_i, u, v)."""
    return np.tensordot(m.weights, spec.tensor(t, m.grid), axes=1)


def hamiltonian_value(spec: PayoffSpec, t: float, m: GridMeasure) -> MatrixGameSolution:
    return matrix_game_value(payoff_matrix(spec, t, m))


def isaacs_gap(spec: PayoffSpec, t: float, m: GridMeasure) -> float:
    """Pure minmax minus pure maxmin of the stage matrix; zero iff a saddle exists."""
    upper, lower = pure_bounds(payoff_matrix(spec, t, m))
    return upper - lower


def _probe_measures(grid: SpatialGrid, rng: np.random.Generator):
    # half of the pairs are translates, on which d1 is attained by phi(x) = x
    m = random_atomic_measure(grid, rng, radius=grid.half_width / 2)
    if rng.random() < 0.5:
        return m, random_atomic_measure(grid, rng, radius=grid.half_width / 2)
    shift = int(rng.integers(1, max(2, grid.n_points // 16)))
    return m, GridMeasure(grid, np.roll(m.weights, shift))


def lipschitz_probe(spec: PayoffSpec, samples: int, grid: SpatialGrid,
                    t: Optional[float] = None, seed: int = 0) -> float:
    """Largest sampled |H(t, m) - H(t, m')| / d1(m, m'); at most C for a valid spec."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        s = rng.uniform(0.0, spec.horizon) if t is None else t
        m, m2 = _probe_measures(grid, rng)
        dist = wasserstein1(m, m2)
        if dist < 1e-12:
            continue
        gap = abs(hamiltonian_value(spec, s, m).value - hamiltonian_value(spec, s, m2).value)
        worst = max(worst, gap / dist)
    if worst > spec.bound + 1e-6:
        logger.warning(f'H Lipschitz ratio {worst:.6g} exceeds C={spec.bound:g} for {spec!r}')
    return worst


def time_lipschitz_probe(spec: PayoffSpec, samples: int, grid: SpatialGrid, seed: int = 0) -> float:
    """Largest sampled |H(t, m) - H(t', m)| / |t - t'|."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        t, t2 = rng.uniform(0.0, spec.horizon, size=2)
        if abs(t - t2) < 1e-9:
            continue
        m = random_atomic_measure(grid, rng, radius=grid.half_width / 2)
        gap = abs(hamiltonian_value(spec, t, m).value - hamiltonian_value(spec, t2, m).value)
        worst = max(worst, gap / abs(t - t2))
    return worst
