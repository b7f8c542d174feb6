import logging

import numpy as np

from martingales import tree_from_table, write_tree
from solvers import Partition, convergence_study, non_revealing_value
from utils.runner_utils import parallel_map, timed

from runners.base import BaseRunner

logger = logging.getLogger(__name__)


class SolveRunner(BaseRunner):
    """Backward vex recursion on the configured lattice plus the step-count study."""

    def non_revealing_column(self, table) -> np.ndarray:
        """U0 on the remaining partition from every (t_q, lattice point)."""
        times = self.partition.times
        points = self.lattice.points

        def baseline(item):
            q, k = item
            if q == len(times) - 1:
                return 0.0
            return non_revealing_value(self.spec, times[q], table.measure(q, points[k]), Partition(tuple(times[q:])))

        items = [(q, k) for q in range(len(times)) for k in range(len(points))]
        return np.array(parallel_map(baseline, items, self.threads, desc='non-revealing'))

    def run(self) -> int:
        cfg = self.cfg
        logger.info(f'solving {self.spec!r} on {self.lattice!r}, N={self.partition.n_steps}, scheme={cfg.scheme}')
        with timed('backward sweep', self.timings):
            table = self.solve()
        with timed('non-revealing baseline', self.timings):
            baseline = self.non_revealing_column(table)
        self.write_table(table, {'non_revealing': baseline})

        if cfg.scheme == 'heat':
            tree = tree_from_table(table, self.point_id)
            write_tree(tree, self.path('tree.csv'), self.header)
            logger.info(f'optimal posterior tree at the prior has {len(tree)} nodes')

        with timed('convergence study', self.timings):
            study = convergence_study(self.spec, cfg.start, cfg.prior_coords, cfg.convergence_steps, self.lattice,
                                      horizon=cfg.horizon, with_bias=cfg.bias_column, threads=self.threads)
        self.write(study, 'convergence.csv')
        logger.info(f'V(t0, prior) = {table.value(0, self.point_id):.10g}')
        return 0
