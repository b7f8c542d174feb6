import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from utils.errors import GridMismatchError, MeasureError

logger = logging.getLogger(__name__)

SUM_TOL = 1e-12


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform symmetric grid ``-L = x_0 < ... < x_{n-1} = L``.

    ``dimension`` stays 1; the field is carried so that layouts for d > 1
    can be added without changing call sites.
    """
    half_width: float = 8.0
    n_points: int = 257
    dimension: int = 1

    def __post_init__(self):
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise MeasureError(f'n_points must be odd and >= 3, got {self.n_points}')
        if not self.half_width > 0:
            raise MeasureError(f'half_width must be positive, got {self.half_width}')
        if self.dimension != 1:
            raise MeasureError('only one-dimensional grids are supported')

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = np.linspace(-self.half_width, self.half_width, self.n_points)
        nodes[self.n_points // 2] = 0.0
        nodes.setflags(write=False)
        return nodes

    def nearest_index(self, x: float) -> int:
        idx = int(np.rint((x + self.half_width) / self.spacing))
        return min(max(idx, 0), self.n_points - 1)

    def index_of(self, x: float, tol: float = 1e-9) -> int:
        idx = self.nearest_index(x)
        if abs(self.nodes[idx] - x) > tol * max(1.0, self.spacing):
            raise GridMismatchError(f'{x} is not a grid node (nearest {self.nodes[idx]})')
        return idx


class GridMeasure:
    """Probability measure given by its weights on the nodes of a grid.

    Instances are immutable; the weight vector is read-only.
    """
    __slots__ = ('grid', 'weights')

    def __init__(self, grid: SpatialGrid, weights: Iterable[float]):
        weights = np.array(weights, dtype=np.float64)
        if weights.shape != (grid.n_points,):
            raise MeasureError(
                f'expected {grid.n_points} weights, got shape {weights.shape}'
            )
        if not np.all(np.isfinite(weights)) or weights.min() < -SUM_TOL:
            raise MeasureError('weights must be finite and nonnegative')
        total = weights.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise MeasureError(f'weights sum to {total!r}, not 1')
        weights = np.clip(weights, 0.0, None)
        weights.setflags(write=False)
        object.__setattr__(self, 'grid', grid)
        object.__setattr__(self, 'weights', weights)

    def __setattr__(self, name, value):
        raise AttributeError('GridMeasure is immutable')

    def __repr__(self):
        idx = self.support
        if len(idx) <= 4:
            atoms = ', '.join(f'{self.grid.nodes[i]:g}:{self.weights[i]:.4g}' for i in idx)
        else:
            atoms = f'{len(idx)} atoms'
        return f'GridMeasure({atoms})'

    @classmethod
    def normalized(cls, grid: SpatialGrid, raw: Iterable[float]) -> 'GridMeasure':
        raw = np.clip(np.asarray(raw, dtype=np.float64), 0.0, None)
        total = raw.sum()
        if not total > 0:
            raise MeasureError('cannot normalize a vector without positive mass')
        return cls(grid, raw / total)

    @classmethod
    def dirac(cls, grid: SpatialGrid, x: float) -> 'GridMeasure':
        weights = np.zeros(grid.n_points)
        weights[grid.index_of(x)] = 1.0
        return cls(grid, weights)

    @classmethod
    def from_atoms(cls, grid: SpatialGrid, xs: Sequence[float], probs: Sequence[float]) -> 'GridMeasure':
        weights = np.zeros(grid.n_points)
        for x, p in zip(xs, probs):
            weights[grid.index_of(x)] += p
        return cls.normalized(grid, weights)

    @classmethod
    def from_frame(cls, grid: SpatialGrid, frame: pd.DataFrame) -> 'GridMeasure':
        return cls.from_atoms(grid, frame['x'].to_numpy(), frame['weight'].to_numpy())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'x': self.grid.nodes, 'weight': self.weights})

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.weights)

    @property
    def mean(self) -> float:
        return float(self.weights @ self.grid.nodes)

    def expect(self, values: np.ndarray) -> float:
        return float(self.weights @ values)

    def mix(self, other: 'GridMeasure', r: float) -> 'GridMeasure':
        """(1 - r) * self + r * other."""
        _check_same_grid(self, other)
        return GridMeasure.normalized(self.grid, (1.0 - r) * self.weights + r * other.weights)


def _check_same_grid(m: GridMeasure, m2: GridMeasure):
    if m.grid != m2.grid:
        raise GridMismatchError(f'measures live on different grids: {m.grid} vs {m2.grid}')


def combine(grid: SpatialGrid, probs: Sequence[float], measures: Sequence[GridMeasure]) -> GridMeasure:
    """Mixture sum_k probs[k] * measures[k]."""
    stacked = np.stack([m.weights for m in measures])
    return GridMeasure.normalized(grid, np.asarray(probs, dtype=np.float64) @ stacked)


def moment_p(m: GridMeasure, p: int) -> float:
    if p < 1:
        raise MeasureError(f'moment order must be >= 1, got {p}')
    return float(np.sum(m.weights * np.abs(m.grid.nodes) ** p) ** (1.0 / p))


def second_moment(m: GridMeasure) -> float:
    """|m|_2^2."""
    return float(m.weights @ m.grid.nodes ** 2)


def total_variation(m: GridMeasure, m2: GridMeasure) -> float:
    _check_same_grid(m, m2)
    return 0.5 * float(np.abs(m.weights - m2.weights).sum())


def wasserstein1(m: GridMeasure, m2: GridMeasure) -> float:
    """d_1 as the L1 distance between the two CDFs."""
    _check_same_grid(m, m2)
    return m.grid.spacing * float(np.abs(m.cdf - m2.cdf)[:-1].sum())


def _quantile_function(qs: np.ndarray, cws: np.ndarray, xs: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cws, qs)
    return xs[np.clip(idx, 0, len(xs) - 1)]


def wasserstein2(m: GridMeasure, m2: GridMeasure) -> float:
    """d_2 through the comonotone (quantile) coupling."""
    _check_same_grid(m, m2)
    cws1, cws2 = m.cdf, m2.cdf
    levels = np.unique(np.concatenate([cws1, cws2]))
    levels = levels[(levels > 0) & (levels < 1 + SUM_TOL)]
    dq = np.diff(np.concatenate([[0.0], levels]))
    # quantiles are read at the middle of each level interval
    mid = levels - 0.5 * dq
    xs = m.grid.nodes
    gap = _quantile_function(mid, cws1, xs) - _quantile_function(mid, cws2, xs)
    return float(np.sqrt(np.sum(dq * gap ** 2)))


def clamp_pushforward(m: GridMeasure, radius: float) -> GridMeasure:
    """Move the mass outside [-R, R] to the nearest node inside."""
    grid = m.grid
    if not radius > 0:
        raise MeasureError(f'truncation radius must be positive, got {radius}')
    if radius > grid.half_width * (1 + 1e-12):
        raise MeasureError(f'truncation radius {radius} exceeds the grid half width')
    nodes = grid.nodes
    inside = np.flatnonzero(np.abs(nodes) <= radius * (1 + 1e-12))
    lo, hi = inside[0], inside[-1]
    weights = m.weights.copy()
    weights[lo] += weights[:lo].sum()
    weights[hi] += weights[hi + 1:].sum()
    weights[:lo] = 0.0
    weights[hi + 1:] = 0.0
    return GridMeasure.normalized(grid, weights)


def random_atomic_measure(grid: SpatialGrid, rng: np.random.Generator,
                          max_atoms: int = 6, radius: float = None) -> GridMeasure:
    """Measure with 1..max_atoms atoms on nodes within ``radius`` of 0."""
    radius = grid.half_width if radius is None else radius
    candidates = np.flatnonzero(np.abs(grid.nodes) <= radius + 1e-12)
    n_atoms = int(rng.integers(1, max_atoms + 1))
    idx = rng.choice(candidates, size=n_atoms, replace=False)
    weights = np.zeros(grid.n_points)
    weights[idx] = rng.dirichlet(np.ones(n_atoms))
    return GridMeasure.normalized(grid, weights)
