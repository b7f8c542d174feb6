import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from games import hamiltonian_value, matrix_game_value, payoff_matrix
from martingales.splitting import SplittingPlan
from measures import GridMeasure, heat_evolve, heat_flow, total_variation
from payoffs.base import PayoffSpec
from solvers.lattice import BeliefLattice
from solvers.partition import Partition
from solvers.vex import LatticeSplit, lower_envelope
from utils.errors import HorizonError, MeasureError, ProjectionError
from utils.runner_utils import parallel_map, tagged_logger

logger = logging.getLogger(__name__)

SCHEMES = ('heat', 'voronoi')


@dataclass(eq=False)
class ValueTable:
    """V on ``lattice`` x ``partition``: ``values[q, k]`` at time t_q and lattice point k."""
    partition: Partition
    lattice: BeliefLattice
    values: np.ndarray
    splits: Dict[Tuple[int, int], LatticeSplit]
    scheme: str = 'heat'
    payoff_name: str = ''
    _envelope_cache: Dict = field(default_factory=dict, repr=False)

    @property
    def n_steps(self) -> int:
        return self.partition.n_steps

    def measure(self, q: int, coords) -> GridMeasure:
        if self.scheme == 'voronoi':
            return self.lattice.dirac_embedding(coords)
        return self.lattice.measure(self.partition, q, coords)

    def value(self, q: int, point_id: int) -> float:
        return float(self.values[q, point_id])

    def value_at(self, q: int, coords) -> float:
        """Lower convex interpolation of slice q at arbitrary coordinates."""
        point_id = self.lattice.find(coords)
        if point_id is not None:
            return self.value(q, point_id)
        return lower_envelope(self.lattice.points, self.values[q], coords)[0]

    def plan(self, q: int, point_id: int) -> SplittingPlan:
        split = self.splits.get((q, point_id))
        if split is None:
            raise MeasureError(f'no splitting plan stored at time index {q}, point {point_id}')
        posteriors = [self.measure(q, self.lattice.points[k]) for k in split.atom_ids]
        return SplittingPlan(split.weights, posteriors, split.atom_ids,
                             self.measure(q, self.lattice.points[point_id]))

    def as_functional(self):
        """V(t, m) as a MeasureFunctional.

        Coordinates of m are recovered by least squares against the basis at
        the neighbouring partition times; values are linear in time between them.
        """
        from checks.functionals import MeasureFunctional

        partition, lattice = self.partition, self.lattice

        def evaluate(t: float, m: GridMeasure) -> float:
            q = partition.interval_of(t)
            if partition.n_steps == 0:
                return 0.0
            t0, t1 = partition.times[q], partition.times[q + 1]
            theta = (t - t0) / (t1 - t0)
            lower = self.value_at(q, lattice.coordinates(partition, q, m))
            if theta <= 0.0:
                return lower
            upper = self.value_at(q + 1, lattice.coordinates(partition, q + 1, m))
            return (1.0 - theta) * lower + theta * upper

        return MeasureFunctional(evaluate, tier='A1', name=f'V[{self.payoff_name}]')

    def to_frames(self) -> Tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
        """(value, plans, lattice) tables for serialization."""
        n_times, n_points = self.values.shape
        value = pd.DataFrame({
            'time_index': np.repeat(np.arange(n_times), n_points),
            'lattice_point_id': np.tile(np.arange(n_points), n_times),
            'value': self.values.ravel(),
        })
        coord_cols = [f'coord_{j + 1}' for j in range(self.lattice.size)]
        rows = []
        for (q, point_id), split in sorted(self.splits.items()):
            for atom, (weight, k) in enumerate(zip(split.weights, split.atom_ids)):
                rows.append([q, point_id, atom, int(k), weight, *self.lattice.points[k]])
        plans = pd.DataFrame(rows, columns=['time_index', 'point_id', 'atom_id', 'posterior_id', 'weight'] + coord_cols)
        lattice = pd.DataFrame(self.lattice.points, columns=coord_cols)
        lattice.insert(0, 'point_id', np.arange(len(self.lattice)))
        return value, plans, lattice

    @classmethod
    def from_frames(cls, partition: Partition, lattice: BeliefLattice, value: pd.DataFrame,
                    plans: pd.DataFrame, scheme: str = 'heat', payoff_name: str = '') -> 'ValueTable':
        n_times = int(value['time_index'].max()) + 1
        if n_times != len(partition.times) or int(value['lattice_point_id'].max()) + 1 != len(lattice):
            raise MeasureError('stored value table does not match the configured partition and lattice')
        values = np.zeros((n_times, len(lattice)))
        values[value['time_index'].to_numpy(int), value['lattice_point_id'].to_numpy(int)] = value['value'].to_numpy()
        splits = {}
        for (q, point_id), group in plans.groupby(['time_index', 'point_id'], sort=True):
            group = group.sort_values('atom_id')
            splits[(int(q), int(point_id))] = LatticeSplit(
                group['weight'].to_numpy(np.float64), group['posterior_id'].to_numpy(int))
        return cls(partition, lattice, values, splits, scheme, payoff_name)


def non_revealing_value(spec: PayoffSpec, t: float, m: GridMeasure, partition: Partition) -> float:
    """Left-endpoint sum of H along the heat flow of m, U0 on the partition."""
    if abs(t - partition.start) > 1e-12:
        raise HorizonError(f'non-revealing value starts at the partition start {partition.start}, got {t}')
    flow = heat_flow(m, partition.times)
    return float(sum(
        step * hamiltonian_value(spec, partition.times[q], flow[q]).value
        for q, step in enumerate(partition.steps)
    ))


def vex_on_lattice(table_slice: np.ndarray, lattice: BeliefLattice, coords,
                   partition: Optional[Partition] = None, q: int = 0) -> Tuple[float, SplittingPlan]:
    """vex of the sampled function ``table_slice`` at ``coords`` with its supporting plan.

    Posteriors are embedded at time index q of ``partition`` (point masses when
    no partition is given).
    """
    value, split = lower_envelope(lattice.points, table_slice, coords)

    def embed(c):
        return lattice.dirac_embedding(c) if partition is None else lattice.measure(partition, q, c)

    plan = SplittingPlan(split.weights, [embed(lattice.points[k]) for k in split.atom_ids],
                         split.atom_ids, embed(coords))
    return value, plan


class ValueSolver:
    """Backward vex recursion V[q] = vex(step * H(t_q, .) + V[q+1]) on a belief lattice."""

    def __init__(self, spec: PayoffSpec, partition: Partition, lattice: BeliefLattice,
                 scheme: str = 'heat', threads: int = 1):
        if scheme not in SCHEMES:
            raise MeasureError(f'unknown lattice scheme {scheme!r}, expected one of {SCHEMES}')
        self.spec = spec
        self.partition = partition
        self.lattice = lattice
        self.scheme = scheme
        self.threads = threads

    def stage_costs(self, q: int) -> np.ndarray:
        """step_q * H(t_q, .) at every lattice point."""
        t, step = self.partition.times[q], self.partition.steps[q]
        points = self.lattice.points
        if self.scheme == 'heat':
            basis = self.lattice.basis(self.partition)[q]
            matrices = [payoff_matrix(self.spec, t, GridMeasure(self.lattice.grid, row)) for row in basis]
            stacked = np.stack(matrices)
            games = [np.tensordot(c, stacked, axes=1) for c in points]
        else:
            games = [payoff_matrix(self.spec, t, self.lattice.dirac_embedding(c)) for c in points]
        return step * np.array([matrix_game_value(A).value for A in games])

    def continuation(self, q: int, next_values: np.ndarray) -> np.ndarray:
        """V[q+1] seen from time t_q at every lattice point."""
        if self.scheme == 'heat':
            return next_values
        t0, t1 = self.partition.times[q], self.partition.times[q + 1]

        def carry(c):
            coords = self.lattice.project(heat_evolve(self.lattice.dirac_embedding(c), t0, t1))
            return lower_envelope(self.lattice.points, next_values, coords)[0]

        return np.array(parallel_map(carry, self.lattice.points, self.threads))

    def solve(self) -> ValueTable:
        n_steps = self.partition.n_steps
        points = self.lattice.points
        values = np.zeros((n_steps + 1, len(points)))
        splits = {}
        for q in tqdm(range(n_steps - 1, -1, -1), desc='backward sweep', disable=None, leave=False):
            g = self.stage_costs(q) + self.continuation(q, values[q + 1])
            results = parallel_map(lambda c: lower_envelope(points, g, c), points, self.threads)
            for k, (value, split) in enumerate(results):
                values[q, k] = value
                splits[(q, k)] = split
        logger.info(f'solved {self.lattice!r} over {n_steps} steps ({self.scheme} scheme), '
                    f'V range [{values.min():.6g}, {values.max():.6g}]')
        return ValueTable(self.partition, self.lattice, values, splits, self.scheme, self.spec.name)


def solve_value(spec: PayoffSpec, partition: Partition, lattice: BeliefLattice,
                scheme: str = 'heat', threads: int = 1) -> ValueTable:
    return ValueSolver(spec, partition, lattice, scheme, threads).solve()


def convergence_study(spec: PayoffSpec, start: float, prior: Union[GridMeasure, Sequence[float]],
                      n_steps_list: Sequence[int], lattice: BeliefLattice, horizon: Optional[float] = None,
                      with_bias: bool = False, threads: int = 1, tol: float = 1e-9) -> pd.DataFrame:
    """V on uniform partitions of each step count, started from ``prior`` at time ``start``.

    ``prior`` is either the initial law as a GridMeasure or its lattice coordinates.
    Values only exist on lattice points, so a measure is converted to coordinates
    once and must lie on the span of the support point masses (ProjectionError otherwise).

    Columns: n_steps, value, difference (to the previous row), non_revealing and,
    with ``with_bias``, the Voronoi-scheme value and its offset.
    """
    if any(b <= a for a, b in zip(n_steps_list[:-1], n_steps_list[1:])):
        raise HorizonError(f'step counts must increase: {list(n_steps_list)}')
    horizon = spec.horizon if horizon is None else horizon
    if isinstance(prior, GridMeasure):
        first = Partition.uniform(start, horizon, n_steps_list[0])
        coords = lattice.coordinates(first, 0, prior)
        if not total_variation(lattice.measure(first, 0, coords), prior) <= tol:
            raise ProjectionError(f'initial law {prior!r} is not a mixture of the lattice support')
        prior = coords
    prior = np.asarray(prior, dtype=np.float64)
    rows = []
    for n_steps in tqdm(n_steps_list, desc='convergence', disable=None, leave=False):
        partition = Partition.uniform(start, horizon, n_steps)
        with tagged_logger(logger, f'N={n_steps}'):
            table = solve_value(spec, partition, lattice, threads=threads)
            row = {
                'n_steps': n_steps,
                'value': table.value_at(0, prior),
                'non_revealing': non_revealing_value(spec, start, table.measure(0, prior), partition),
            }
            if with_bias:
                biased = solve_value(spec, partition, lattice, scheme='voronoi', threads=threads)
                row['voronoi_value'] = biased.value_at(0, prior)
                row['projection_bias'] = row['voronoi_value'] - row['value']
            logger.info(f"V={row['value']:.10g} U0={row['non_revealing']:.10g}")
        rows.append(row)
    frame = pd.DataFrame(rows)
    frame.insert(2, 'difference', frame['value'].diff())
    return frame
