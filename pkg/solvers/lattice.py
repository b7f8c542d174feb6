"""Finite belief lattices over a small set of support nodes.

A lattice point is a coordinate vector ``c`` on the simplex over the ``S``
support nodes.  At partition index ``q`` it denotes the measure
``sum_j c_j rho_j^(q)`` where ``rho_j^(q)`` is the point mass at the j-th
support node carried along the partition by the heat flow.  Heat evolution
therefore leaves coordinates unchanged and splittings of coordinates are
splittings of measures.
"""
import itertools
import logging
from functools import cached_property, lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from measures import GridMeasure, SpatialGrid, heat_flow
from solvers.partition import Partition
from utils.errors import GridMismatchError, MeasureError, ProjectionError

logger = logging.getLogger(__name__)

KEY_DIGITS = 12


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _key(coords: np.ndarray) -> Tuple[float, ...]:
    return tuple(np.round(np.asarray(coords, dtype=np.float64), KEY_DIGITS) + 0.0)


class BeliefLattice:
    def __init__(self, grid: SpatialGrid, support: Sequence[float], resolution: int,
                 extra_points: Optional[Iterable[Sequence[float]]] = None,
                 cell_radius: float = 4.0, projection_tol: float = 1e-3):
        if resolution < 1:
            raise MeasureError(f'lattice resolution must be >= 1, got {resolution}')
        support = [float(x) for x in support]
        if not support or len(set(support)) != len(support):
            raise MeasureError(f'support nodes must be distinct and non-empty: {support}')
        self.grid = grid
        self.support = tuple(support)
        self.support_index = np.array([grid.index_of(x) for x in support])
        self.resolution = int(resolution)
        self.cell_radius = float(cell_radius)
        self.projection_tol = float(projection_tol)

        points = [np.array(c, dtype=np.float64) / resolution
                  for c in _compositions(resolution, len(support))]
        self._ids: Dict[Tuple[float, ...], int] = {}
        self._points: List[np.ndarray] = []
        for c in points:
            self._add(c)
        for c in extra_points or ():
            c = np.asarray(c, dtype=np.float64)
            if c.shape != (self.size,) or c.min() < -1e-12 or abs(c.sum() - 1.0) > 1e-9:
                raise MeasureError(f'extra lattice point {c} is not a probability vector over the support')
            self._add(np.clip(c, 0.0, None) / np.clip(c, 0.0, None).sum())
        self.points = np.stack(self._points)
        self.points.setflags(write=False)

    def _add(self, c: np.ndarray):
        key = _key(c)
        if key not in self._ids:
            self._ids[key] = len(self._points)
            self._points.append(c)

    def __len__(self):
        return len(self._points)

    def __repr__(self):
        return f'BeliefLattice(support={self.support}, r={self.resolution}, points={len(self)})'

    @property
    def size(self) -> int:
        """Number of support nodes S."""
        return len(self.support)

    def point_id(self, coords) -> int:
        key = _key(coords)
        if key not in self._ids:
            raise ProjectionError(f'{np.asarray(coords)} is not a lattice point')
        return self._ids[key]

    def find(self, coords) -> Optional[int]:
        return self._ids.get(_key(coords))

    @cached_property
    def vertex_ids(self) -> np.ndarray:
        return np.array([self.point_id(np.eye(self.size)[j]) for j in range(self.size)])

    @cached_property
    def barycenter(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)

    def with_points(self, extra: Iterable[Sequence[float]]) -> 'BeliefLattice':
        current = [p for p in self.points]
        return BeliefLattice(self.grid, self.support, self.resolution,
                             extra_points=current + [np.asarray(c) for c in extra],
                             cell_radius=self.cell_radius, projection_tol=self.projection_tol)

    def midpoint_triples(self) -> np.ndarray:
        """Rows (i, mid, j) of lattice points with points[mid] the midpoint of i and j."""
        triples = []
        for i, j in itertools.combinations(range(len(self)), 2):
            mid = self.find(0.5 * (self.points[i] + self.points[j]))
            if mid is not None and mid not in (i, j):
                triples.append((i, mid, j))
        return np.array(triples, dtype=int).reshape(-1, 3)

    def dirac_embedding(self, coords) -> GridMeasure:
        """sum_j c_j delta_{x_j}, the time-free embedding."""
        weights = np.zeros(self.grid.n_points)
        np.add.at(weights, self.support_index, np.asarray(coords, dtype=np.float64))
        return GridMeasure.normalized(self.grid, weights)

    def basis(self, partition: Partition) -> np.ndarray:
        """Array (N+1, S, n_points) of the heat-flowed point masses at the support."""
        return _basis(self.grid, self.support, partition)

    def measure(self, partition: Partition, q: int, coords) -> GridMeasure:
        basis = self.basis(partition)[q]
        return GridMeasure.normalized(self.grid, np.asarray(coords, dtype=np.float64) @ basis)

    def coordinates(self, partition: Partition, q: int, m: GridMeasure) -> np.ndarray:
        """Least-squares coordinates of m against the time-q basis, projected on the simplex."""
        if m.grid != self.grid:
            raise GridMismatchError('measure and lattice live on different grids')
        basis = self.basis(partition)[q]
        coords = np.linalg.lstsq(basis.T, m.weights, rcond=None)[0]
        coords = np.clip(coords, 0.0, None)
        return coords / coords.sum()

    @cached_property
    def _cells(self) -> np.ndarray:
        nodes = self.grid.nodes
        dist = np.abs(nodes[:, None] - np.asarray(self.support)[None, :])
        nearest = dist.min(axis=1, keepdims=True)
        owners = (dist <= nearest + 1e-12 * max(1.0, self.grid.half_width)).astype(np.float64)
        owners /= owners.sum(axis=1, keepdims=True)
        owners[nearest[:, 0] > self.cell_radius] = 0.0
        return owners

    def project(self, m: GridMeasure) -> np.ndarray:
        """Voronoi-cell masses of m over the support nodes (ties split equally)."""
        if m.grid != self.grid:
            raise GridMismatchError('measure and lattice live on different grids')
        coords = m.weights @ self._cells
        lost = 1.0 - coords.sum()
        if lost > self.projection_tol:
            raise ProjectionError(
                f'{lost:.3e} of the mass lies farther than {self.cell_radius} from the support {self.support}'
            )
        return coords / coords.sum()


@lru_cache(maxsize=64)
def _basis(grid: SpatialGrid, support: Tuple[float, ...], partition: Partition) -> np.ndarray:
    flows = [heat_flow(GridMeasure.dirac(grid, x), partition.times) for x in support]
    basis = np.stack([[flow[q].weights for flow in flows] for q in range(len(partition.times))])
    basis.setflags(write=False)
    return basis

