import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from games import hamiltonian_value
from martingales import expected_cost, sample_atoms
from measures import GridMeasure, heat_kernel, wasserstein1
from payoffs.base import PayoffSpec
from players.informed import InformedStrategy
from players.uninformed import PureUninformedStrategy, UninformedStrategy, make_uninformed_best_reply
from solvers import Partition
from utils.errors import EnumerationBudgetError, MeasureError
from utils.runner_utils import parallel_map

logger = logging.getLogger(__name__)

ENUMERATION_CAP = 100_000
BATCH_SIZE = 1024
PLAYOUT_COLUMNS = ['sample_id', 'stage', 'x', 'u', 'v', 'stage_payoff']


@dataclass(frozen=True)
class PlayoutRecord:
    """One play of the discrete game at the partition times."""
    states: np.ndarray
    actions: List[Tuple[int, int]]
    stage_payoffs: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.stage_payoffs))

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> List['PlayoutRecord']:
        records = []
        for _, group in frame.sort_values(['sample_id', 'stage']).groupby('sample_id', sort=True):
            records.append(cls(group['x'].to_numpy(), list(zip(group['u'].tolist(), group['v'].tolist())),
                               group['stage_payoff'].to_numpy()))
        return records


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    std_error: float
    n_samples: int
    playouts: Optional[pd.DataFrame] = None


@dataclass(frozen=True)
class LiminfReport:
    """gamma(sigma, best reply) against E sum step (H(M) - 2C d1(M, M^))."""
    gamma: float
    bound: float
    tol: float = 1e-9

    @property
    def slack(self) -> float:
        return self.gamma - self.bound

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tol


def _check_setup(sigma: InformedStrategy, partition: Partition, m: GridMeasure):
    if sigma.partition != partition:
        raise MeasureError('the informed strategy was built for another partition')
    if np.abs(sigma.prior.weights - m.weights).max() > 1e-9:
        raise MeasureError('the initial law differs from the root belief of the informed strategy')


def _enumerate(sigma: InformedStrategy, tau: UninformedStrategy, spec: PayoffSpec, partition: Partition,
               m: GridMeasure, cap: int, with_bound: bool) -> Tuple[float, float]:
    _check_setup(sigma, partition, m)
    n_histories = spec.n_u ** partition.n_steps
    if n_histories > cap:
        raise EnumerationBudgetError(f'{n_histories} action histories exceed the enumeration cap {cap}')
    grid = m.grid
    layer = {(): {sigma.root: m.weights.copy()}}
    gamma, bound = 0.0, 0.0
    for q, step in enumerate(partition.steps):
        t = partition.times[q]
        tensor = spec.tensor(t, grid)
        next_layer = {}
        for history, joint in layer.items():
            split = sigma.split_joint(q, joint)
            against = tensor @ tau.mixed_action(q, history)
            for atom, mass in split.items():
                gamma += step * float(mass @ (against @ sigma.mix(q, atom)))
            if with_bound:
                prior_weights = np.sum(list(split.values()), axis=0)
                predicted = GridMeasure.normalized(grid, prior_weights)
            for u in range(spec.n_u):
                emitted = sigma.emit(q, split, u)
                if not emitted:
                    continue
                weights = np.sum(list(emitted.values()), axis=0)
                p_hu = float(weights.sum())
                if p_hu <= 0:
                    continue
                if with_bound:
                    posterior = GridMeasure.normalized(grid, weights)
                    bound += p_hu * step * (
                        hamiltonian_value(spec, t, posterior).value
                        - 2.0 * spec.bound * wasserstein1(posterior, predicted)
                    )
                next_layer[history + (u,)] = sigma.propagate(q, emitted)
        layer = next_layer
    return gamma, bound


def evaluate_exact(sigma: InformedStrategy, tau: UninformedStrategy, spec: PayoffSpec,
                   partition: Partition, m: GridMeasure, cap: int = ENUMERATION_CAP) -> float:
    """Expected total payoff by enumeration over histories, atoms and grid states."""
    return _enumerate(sigma, tau, spec, partition, m, cap, with_bound=False)[0]


def liminf_bound_check(sigma: InformedStrategy, spec: PayoffSpec, partition: Partition, m: GridMeasure,
                       cap: int = ENUMERATION_CAP, tol: float = 1e-9) -> LiminfReport:
    """Exact lower bound on what the best reply secures against ``sigma``."""
    tau = make_uninformed_best_reply(sigma, spec)
    gamma, bound = _enumerate(sigma, tau, spec, partition, m, cap, with_bound=True)
    report = LiminfReport(gamma, bound, tol)
    logger.info(f'liminf check for {sigma.label}: gamma={gamma:.10g} bound={bound:.10g} slack={report.slack:.3e}')
    return report


def _sample_from(cdf_rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One index per row of a (rows, k) cumulative table by inversion."""
    draws = rng.random(cdf_rows.shape[0]) * cdf_rows[:, -1]
    return np.minimum((cdf_rows < draws[:, None]).sum(axis=1), cdf_rows.shape[1] - 1)


def _history_groups(histories: np.ndarray):
    """(history, rows) per distinct action history, histories in lexicographic order."""
    if histories.shape[1] == 0:
        return [((), np.arange(histories.shape[0]))]
    keys, inverse = np.unique(histories, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    return [(tuple(int(d) for d in key), np.flatnonzero(inverse == k)) for k, key in enumerate(keys)]


def _play_batch(sigma: InformedStrategy, tau: UninformedStrategy, spec: PayoffSpec, partition: Partition,
                m: GridMeasure, size: int, seed: np.random.SeedSequence, record: bool):
    rng = np.random.default_rng(seed)
    grid = m.grid
    x = _sample_from(np.broadcast_to(m.cdf, (size, grid.n_points)), rng)
    atoms = np.full(size, sigma.root, dtype=object)
    histories = np.zeros((size, 0), dtype=np.int64)
    totals = np.zeros(size)
    cumulatives = [heat_kernel(grid, step).cumulative for step in partition.steps]
    columns = {c: [] for c in PLAYOUT_COLUMNS} if record else None
    for q, step in enumerate(partition.steps):
        t = partition.times[q]
        for atom in sorted(set(atoms.tolist())):
            rows = np.flatnonzero(atoms == atom)
            plan = sigma.plan(q, atom)
            if len(plan) > 1:
                atoms[rows] = plan.atom_ids[sample_atoms(plan, x[rows], rng)]
            elif plan.atom_ids[0] != atom:
                atoms[rows] = plan.atom_ids[0]
        u = np.zeros(size, dtype=int)
        for atom in sorted(set(atoms.tolist())):
            rows = np.flatnonzero(atoms == atom)
            u[rows] = _sample_from(np.broadcast_to(np.cumsum(sigma.mix(q, atom)), (len(rows), spec.n_u)), rng)
        v = np.zeros(size, dtype=int)
        for history, rows in _history_groups(histories):
            mixed = np.cumsum(tau.mixed_action(q, history))
            v[rows] = _sample_from(np.broadcast_to(mixed, (len(rows), spec.n_v)), rng)
        payoff = step * spec.tensor(t, grid)[x, u, v]
        totals += payoff
        if record:
            columns['stage'].append(np.full(size, q))
            columns['x'].append(grid.nodes[x])
            columns['u'].append(u)
            columns['v'].append(v)
            columns['stage_payoff'].append(payoff)
        histories = np.column_stack([histories, u])
        if q + 1 < partition.n_steps:
            x = _sample_from(cumulatives[q][x], rng)
    frame = None
    if record:
        n_stages = partition.n_steps
        columns['sample_id'] = [np.tile(np.arange(size), n_stages)]
        frame = pd.DataFrame({c: np.concatenate(columns[c]) for c in PLAYOUT_COLUMNS})
    return totals, frame


def evaluate_monte_carlo(sigma: InformedStrategy, tau: UninformedStrategy, spec: PayoffSpec,
                         partition: Partition, m: GridMeasure, n_samples: int, seed: int,
                         batch_size: int = BATCH_SIZE, threads: int = 1, record: bool = False) -> MonteCarloResult:
    """Sample mean and standard error of the total payoff.

    Samples are drawn in fixed-size batches, each with its own child seed, so
    the result does not depend on the thread count.
    """
    if n_samples < 1:
        raise MeasureError(f'n_samples must be >= 1, got {n_samples}')
    _check_setup(sigma, partition, m)
    sizes = [min(batch_size, n_samples - start) for start in range(0, n_samples, batch_size)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    results = parallel_map(
        lambda job: _play_batch(sigma, tau, spec, partition, m, job[0], job[1], record),
        list(zip(sizes, seeds)), threads,
    )
    totals = np.concatenate([r[0] for r in results])
    std_error = float(totals.std(ddof=1) / np.sqrt(len(totals))) if len(totals) > 1 else 0.0
    frame = None
    if record:
        offsets = np.cumsum([0] + sizes[:-1])
        frames = []
        for offset, (_, batch_frame) in zip(offsets, results):
            batch_frame = batch_frame.copy()
            batch_frame['sample_id'] += offset
            frames.append(batch_frame)
        frame = pd.concat(frames, ignore_index=True).sort_values(['sample_id', 'stage'], kind='stable')
        frame = frame.reset_index(drop=True)
    return MonteCarloResult(float(totals.mean()), std_error, len(totals), frame)


@dataclass(frozen=True)
class GuaranteeReport:
    """Largest payoff any pure reply extracts from ``sigma`` against its tree cost."""
    worst_reply: float
    guarantee: float
    n_replies: int
    tol: float = 1e-9

    @property
    def slack(self) -> float:
        return self.guarantee - self.worst_reply

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tol


def upper_guarantee_check(sigma: InformedStrategy, spec: PayoffSpec, partition: Partition, m: GridMeasure,
                          cap: int = ENUMERATION_CAP, tol: float = 1e-9) -> GuaranteeReport:
    """Enumerates every pure strategy of the uninformed player.

    ``cap`` bounds the number of pure strategies times the number of action
    histories each evaluation visits.
    """
    n_keys = sum(spec.n_u ** q for q in range(partition.n_steps))
    n_replies = spec.n_v ** n_keys
    if n_replies * spec.n_u ** partition.n_steps > cap:
        raise EnumerationBudgetError(f'{n_replies} pure replies exceed the enumeration cap {cap}')
    worst = max(
        evaluate_exact(sigma, tau, spec, partition, m, cap)
        for tau in PureUninformedStrategy.enumerate(spec.n_v, partition.n_steps, spec.n_u)
    )
    report = GuaranteeReport(worst, expected_cost(sigma.tree(), spec), n_replies, tol)
    logger.info(f'{n_replies} pure replies against {sigma.label}: worst={worst:.10g} '
                f'guarantee={report.guarantee:.10g}')
    return report
