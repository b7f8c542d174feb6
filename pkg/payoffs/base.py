import logging
from functools import lru_cache
from typing import Callable, Dict, Optional

import numpy as np

from measures import SpatialGrid
from utils.errors import HorizonError

logger = logging.getLogger(__name__)

HORIZON_TOL = 1e-12


class PayoffSpec:
    """Running cost f(t, x, u, v) on finite action sets, paid by the informed
    (row, minimizing) player to the uninformed (column) player.

    ``bound`` is the constant C of the model: |f| <= C and f is C-Lipschitz in
    (t, x) uniformly in the actions.
    """
    name = 'payoff'

    def __init__(self, n_u: int, n_v: int, bound: float, horizon: float = 1.0):
        self.n_u = int(n_u)
        self.n_v = int(n_v)
        self.bound = float(bound)
        self.horizon = float(horizon)

    def __repr__(self):
        return f'{type(self).__name__}({self.name}, {self.n_u}x{self.n_v}, C={self.bound:g})'

    @classmethod
    def build_payoff(cls, cfg):
        return cls(horizon=cfg.horizon)

    def evaluate(self, t: float, x, u, v) -> np.ndarray:
        """Vectorized f; ``x``, ``u`` and ``v`` broadcast against each other."""
        raise NotImplementedError

    def check_time(self, t: float):
        if t < -HORIZON_TOL or t > self.horizon + HORIZON_TOL:
            raise HorizonError(f't={t} outside the horizon [0, {self.horizon}]')

    def tensor(self, t: float, grid: SpatialGrid) -> np.ndarray:
        """f(t, x_i, u, v) for every node, shape (n_points, n_u, n_v)."""
        self.check_time(t)
        return _stage_tensor(self, float(t), grid)

    def spot_check(self, grid: SpatialGrid, samples: int = 1000, seed: int = 0) -> Dict[str, float]:
        """Worst sampled |f|/C and (t, x)-Lipschitz ratio over C; both must be <= 1."""
        rng = np.random.default_rng(seed)
        t = rng.uniform(0.0, self.horizon, size=(2, samples))
        x = rng.choice(grid.nodes, size=(2, samples))
        u = rng.integers(self.n_u, size=samples)
        v = rng.integers(self.n_v, size=samples)
        f0 = np.asarray(self.evaluate(t[0], x[0], u, v), dtype=np.float64)
        f1 = np.asarray(self.evaluate(t[1], x[1], u, v), dtype=np.float64)
        dist = np.abs(t[0] - t[1]) + np.abs(x[0] - x[1])
        moved = dist > 1e-12
        lipschitz = np.abs(f0 - f1)[moved] / dist[moved]
        report = {
            'bound_ratio': float(np.abs(np.concatenate([f0, f1])).max() / self.bound),
            'lipschitz_ratio': float(lipschitz.max() / self.bound) if len(lipschitz) else 0.0,
        }
        if max(report.values()) > 1.0 + 1e-9:
            logger.warning(f'{self!r} violates its declared constant: {report}')
        return report


@lru_cache(maxsize=4096)
def _stage_tensor(spec: PayoffSpec, t: float, grid: SpatialGrid) -> np.ndarray:
    values = spec.evaluate(
        t,
        grid.nodes[:, None, None],
        np.arange(spec.n_u)[None, :, None],
        np.arange(spec.n_v)[None, None, :],
    )
    tensor = np.broadcast_to(np.asarray(values, dtype=np.float64),
                             (grid.n_points, spec.n_u, spec.n_v)).copy()
    tensor.setflags(write=False)
    return tensor


class FunctionPayoff(PayoffSpec):
    """Wraps a plain vectorized callable; used for ad-hoc specs and tests."""
    name = 'function'

    def __init__(self, fn: Callable, n_u: int, n_v: int, bound: float,
                 horizon: float = 1.0, label: Optional[str] = None):
        super().__init__(n_u, n_v, bound, horizon)
        self.fn = fn
        if label is not None:
            self.name = label

    def evaluate(self, t, x, u, v):
        return self.fn(t, x, u, v)


def constant_matrix_payoff(matrix, horizon: float = 1.0) -> FunctionPayoff:
    """x- and t-independent payoff given by a fixed matrix."""
    matrix = np.asarray(matrix, dtype=np.float64)
    bound = max(float(np.abs(matrix).max()), 1e-12)

    def fn(t, x, u, v):
        return matrix[u, v] + 0.0 * np.asarray(x, dtype=np.float64)

    return FunctionPayoff(fn, matrix.shape[0], matrix.shape[1], bound, horizon, label='constant-matrix')
