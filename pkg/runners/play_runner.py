import logging
from typing import Optional

import numpy as np
import pandas as pd

from martingales import expected_cost, read_tree
from players import (
    PureUninformedStrategy,
    UniformStrategy,
    evaluate_exact,
    evaluate_monte_carlo,
    full_revealing_strategy,
    liminf_bound_check,
    make_informed_strategy,
    make_uninformed_best_reply,
    nonrevealing_strategy,
    strategy_from_tree,
)
from utils.errors import ConfigError, EnumerationBudgetError
from utils.file_utils import read_frame
from utils.runner_utils import timed

from runners.base import BaseRunner

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['sigma', 'tau', 'n_samples', 'mean', 'std_error', 'exact', 'upper_guarantee',
                   'lower_bound', 'value', 'guarantee_ok']


class PlayRunner(BaseRunner):
    """Plays the discrete game between an informed and an uninformed strategy."""

    def __init__(self, cfg, output_dir):
        super().__init__(cfg, output_dir)
        play = cfg.play
        self.sigma_name = play['sigma']
        self.tau_name = play['tau']
        self.n_samples = int(play['samples'])
        self.seed = int(play['seed'])
        self.batch_size = int(play['batch_size'])
        self.cap = int(play['enumeration_cap'])
        self.table_dir = play['table_dir']
        self.solve_first = bool(play['solve_first'])
        self.table = None

    def value_table(self):
        if self.table is None:
            if self.table_dir:
                self.table = self.load_table(self.table_dir)
            elif self.solve_first:
                with timed('backward sweep', self.timings):
                    self.table = self.solve()
                self.write_table(self.table)
            else:
                raise ConfigError('the optimal strategy needs a value table: pass --table-dir or --solve-first')
        return self.table

    def informed(self):
        name = self.sigma_name
        if name == 'optimal':
            return make_informed_strategy(self.value_table(), self.spec, self.point_id)
        if name == 'nonrevealing':
            return nonrevealing_strategy(self.lattice, self.partition, self.spec, self.point_id)
        if name == 'fullrevealing':
            return full_revealing_strategy(self.lattice, self.partition, self.spec, self.point_id)
        if not self.cfg.play['sigma_file']:
            raise ConfigError('--sigma file needs --sigma-file pointing to a tree written by `solve`')
        return strategy_from_tree(read_tree(self.cfg.play['sigma_file']), self.spec)

    def uninformed(self, sigma):
        name = self.tau_name
        if name == 'bestreply':
            return make_uninformed_best_reply(sigma, self.spec)
        if name == 'uniform':
            return UniformStrategy(self.spec.n_v)
        if not self.cfg.play['tau_file']:
            raise ConfigError('--tau file needs --tau-file with columns stage,history,v')
        return PureUninformedStrategy.from_frame(read_frame(self.cfg.play['tau_file']), self.spec.n_v)

    def _optional(self, label: str, fn) -> Optional[float]:
        try:
            return fn()
        except EnumerationBudgetError as e:
            logger.warning(f'{label} skipped: {e}')
            return np.nan

    def run(self) -> int:
        sigma = self.informed()
        tau = self.uninformed(sigma)
        partition, m = sigma.partition, sigma.prior
        logger.info(f'playing {sigma!r} against {tau.label}, N={partition.n_steps}')

        exact = self._optional('exact evaluation',
                               lambda: evaluate_exact(sigma, tau, self.spec, partition, m, self.cap))
        if self.n_samples == 0:
            if np.isnan(exact):
                raise EnumerationBudgetError('exact evaluation exceeds the enumeration cap; pass --samples')
            mean, std_error = exact, np.nan
        else:
            with timed('monte carlo', self.timings):
                result = evaluate_monte_carlo(sigma, tau, self.spec, partition, m, self.n_samples, self.seed,
                                              self.batch_size, self.threads, record=True)
            mean, std_error = result.mean, result.std_error
            self.write(result.playouts, 'playouts.csv')

        upper = self._optional('upper guarantee', lambda: expected_cost(sigma.tree(), self.spec))
        lower = self._optional('liminf bound',
                               lambda: liminf_bound_check(sigma, self.spec, partition, m, self.cap).bound)
        value = self.table.value(0, self.point_id) if self.table is not None else np.nan
        margin = 0.0 if np.isnan(std_error) else 4.0 * std_error
        guarantee_ok = bool(np.isnan(upper) or upper >= mean - margin - 1e-9)
        summary = pd.DataFrame([{
            'sigma': sigma.label, 'tau': tau.label, 'n_samples': self.n_samples, 'mean': mean,
            'std_error': std_error, 'exact': exact, 'upper_guarantee': upper, 'lower_bound': lower,
            'value': value, 'guarantee_ok': guarantee_ok,
        }], columns=SUMMARY_COLUMNS)
        self.write(summary, 'summary.csv')
        logger.info(f'mean payoff {mean:.10g} (se {std_error:.3g}), upper guarantee {upper:.10g}')
        if not guarantee_ok:
            logger.warning('the sampled payoff exceeds the announced guarantee by more than 4 standard errors')
        return 0
