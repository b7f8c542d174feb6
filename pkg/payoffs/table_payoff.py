import logging
import os

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from payoffs import register_payoff
from payoffs.base import PayoffSpec
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

COLUMNS = ['t', 'x', 'u', 'v', 'f']


@register_payoff('table')
class TablePayoff(PayoffSpec):
    """Payoff read from a ``t,x,u,v,f`` table, bilinear in (t, x).

    Every (u, v) pair must be tabulated on the same (t, x) grid.  Queries
    outside the tabulated box are clamped to it.  The constant C is the
    largest of the table's absolute value and its slopes along t and x.
    """

    def __init__(self, frame: pd.DataFrame, horizon: float = 1.0):
        missing = set(COLUMNS) - set(frame.columns)
        if missing:
            raise ConfigError(f'payoff table lacks columns {sorted(missing)}')
        self.times = np.unique(frame['t'].to_numpy(dtype=np.float64))
        self.xs = np.unique(frame['x'].to_numpy(dtype=np.float64))
        n_u = int(frame['u'].max()) + 1
        n_v = int(frame['v'].max()) + 1
        if len(self.xs) < 2:
            raise ConfigError('payoff table needs at least two x values')

        values = np.full((n_u, n_v, len(self.times), len(self.xs)), np.nan)
        ti = np.searchsorted(self.times, frame['t'].to_numpy(dtype=np.float64))
        xi = np.searchsorted(self.xs, frame['x'].to_numpy(dtype=np.float64))
        values[frame['u'].to_numpy(int), frame['v'].to_numpy(int), ti, xi] = frame['f'].to_numpy(np.float64)
        if np.isnan(values).any():
            raise ConfigError('payoff table is not a full (t, x, u, v) grid')

        if len(self.times) == 1:
            # time-independent table; duplicate the slice so interpolation is defined
            self.times = np.array([self.times[0], self.times[0] + 1.0])
            values = np.concatenate([values, values], axis=2)
        self.values = values

        slope_t = np.abs(np.diff(values, axis=2) / np.diff(self.times)[:, None]).max(initial=0.0)
        slope_x = np.abs(np.diff(values, axis=3) / np.diff(self.xs)).max(initial=0.0)
        bound = max(float(np.abs(values).max()), float(slope_t), float(slope_x), 1e-12)
        super().__init__(n_u, n_v, bound=bound, horizon=horizon)

        self.interpolators = [
            [RegularGridInterpolator((self.times, self.xs), values[u, v]) for v in range(n_v)]
            for u in range(n_u)
        ]
        logger.info(f'payoff table: {n_u}x{n_v} actions, {len(self.times)}x{len(self.xs)} nodes, C={bound:.4g}')

    @classmethod
    def from_csv(cls, path: str, horizon: float = 1.0) -> 'TablePayoff':
        if not os.path.exists(path):
            raise ConfigError(f'payoff table {path!r} not found')
        return cls(pd.read_csv(path, comment='#'), horizon=horizon)

    @classmethod
    def build_payoff(cls, cfg):
        if not getattr(cfg, 'payoff_table', None):
            raise ConfigError('payoff.name = table requires payoff.table')
        return cls.from_csv(cfg.payoff_table, horizon=cfg.horizon)

    def evaluate(self, t, x, u, v):
        t, x, u, v = np.broadcast_arrays(
            np.asarray(t, dtype=np.float64), np.asarray(x, dtype=np.float64),
            np.asarray(u, dtype=int), np.asarray(v, dtype=int),
        )
        points = np.stack([
            np.clip(t, self.times[0], self.times[-1]).ravel(),
            np.clip(x, self.xs[0], self.xs[-1]).ravel(),
        ], axis=-1)
        out = np.empty(points.shape[0])
        flat_u, flat_v = u.ravel(), v.ravel()
        for a in range(self.n_u):
            for b in range(self.n_v):
                mask = (flat_u == a) & (flat_v == b)
                if mask.any():
                    out[mask] = self.interpolators[a][b](points[mask])
        return out.reshape(t.shape)
