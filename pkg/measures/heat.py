import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence

import numpy as np
from scipy.special import ndtr

from measures.grid import GridMeasure, SpatialGrid
from utils.errors import HorizonError, MeasureError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    grid: SpatialGrid
    elapsed: float
    matrix: np.ndarray

    def row(self, i: int) -> np.ndarray:
        return self.matrix[i]

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.matrix, axis=1)


@lru_cache(maxsize=256)
def _kernel_matrix(grid: SpatialGrid, elapsed: float) -> np.ndarray:
    nodes = grid.nodes
    h = grid.spacing
    sigma = np.sqrt(elapsed)
    z = (nodes[None, :] - nodes[:, None]) / sigma
    matrix = np.exp(-0.5 * z ** 2) * (h / (sigma * np.sqrt(2.0 * np.pi)))
    # tails beyond the grid are clamped onto the boundary nodes
    matrix[:, 0] += ndtr((-grid.half_width - nodes) / sigma)
    matrix[:, -1] += ndtr((nodes - grid.half_width) / sigma)
    matrix /= matrix.sum(axis=1, keepdims=True)
    matrix.setflags(write=False)
    return matrix


def heat_kernel(grid: SpatialGrid, elapsed: float) -> TransitionKernel:
    """Row-stochastic Gaussian kernel of variance ``elapsed`` on ``grid``."""
    if not elapsed > 0:
        raise MeasureError(f'kernel time must be positive, got {elapsed}')
    return TransitionKernel(grid, float(elapsed), _kernel_matrix(grid, float(elapsed)))


def heat_evolve(m: GridMeasure, t: float, s: float) -> GridMeasure:
    if s < t:
        raise HorizonError(f'cannot evolve backwards from {t} to {s}')
    if s == t:
        return m
    kernel = heat_kernel(m.grid, s - t)
    return GridMeasure.normalized(m.grid, m.weights @ kernel.matrix)


def heat_flow(m: GridMeasure, times: Sequence[float]) -> List[GridMeasure]:
    """Beliefs at each of ``times`` (m sits at ``times[0]``), one kernel per step."""
    flow = [m]
    for t, s in zip(times[:-1], times[1:]):
        flow.append(heat_evolve(flow[-1], t, s))
    return flow


def smoothed_density(m: GridMeasure, delta: float) -> np.ndarray:
    """Grid samples of the density of rho_delta * m (weights over spacing)."""
    kernel = heat_kernel(m.grid, delta)
    return (m.weights @ kernel.matrix) / m.grid.spacing
