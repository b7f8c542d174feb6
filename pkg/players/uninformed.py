import itertools
import logging
from typing import Dict, Iterator, Tuple

import numpy as np
import pandas as pd

from games import hamiltonian_value
from measures import GridMeasure
from payoffs.base import PayoffSpec
from players.informed import InformedStrategy, Joint
from utils.errors import ConfigError, ZeroProbabilityError

logger = logging.getLogger(__name__)

History = Tuple[int, ...]


def history_label(history: History) -> str:
    return '-'.join(str(u) for u in history)


def parse_history(label) -> History:
    if label is None or (isinstance(label, float) and np.isnan(label)) or str(label) == '':
        return ()
    return tuple(int(u) for u in str(label).split('-'))


class UninformedStrategy:
    """Behaviour of the uninformed player: a mixed action per observed action history."""
    label = 'tau'

    def __init__(self, n_v: int):
        self.n_v = n_v

    def mixed_action(self, q: int, history: History) -> np.ndarray:
        raise NotImplementedError


class UniformStrategy(UninformedStrategy):
    label = 'uniform'

    def mixed_action(self, q, history):
        return np.full(self.n_v, 1.0 / self.n_v)


class PureUninformedStrategy(UninformedStrategy):
    """Deterministic map from (stage, history of informed actions) to an action."""
    label = 'pure'

    def __init__(self, n_v: int, actions: Dict[Tuple[int, History], int], default: int = 0):
        super().__init__(n_v)
        self.actions = actions
        self.default = default

    def action(self, q: int, history: History) -> int:
        return self.actions.get((q, tuple(history)), self.default)

    def mixed_action(self, q, history):
        out = np.zeros(self.n_v)
        out[self.action(q, history)] = 1.0
        return out

    @classmethod
    def enumerate(cls, n_v: int, n_steps: int, n_u: int) -> Iterator['PureUninformedStrategy']:
        """Every pure strategy; there are n_v ** (number of histories) of them."""
        keys = [(q, h) for q in range(n_steps) for h in itertools.product(range(n_u), repeat=q)]
        for choice in itertools.product(range(n_v), repeat=len(keys)):
            yield cls(n_v, dict(zip(keys, choice)))

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, n_v: int) -> 'PureUninformedStrategy':
        missing = {'stage', 'history', 'v'} - set(frame.columns)
        if missing:
            raise ConfigError(f'strategy table lacks columns {sorted(missing)}')
        actions = {}
        for row in frame.itertuples(index=False):
            v = int(row.v)
            if not 0 <= v < n_v:
                raise ConfigError(f'action {v} outside 0..{n_v - 1}')
            actions[(int(row.stage), parse_history(row.history))] = v
        return cls(n_v, actions)

    def to_frame(self) -> pd.DataFrame:
        rows = [{'stage': q, 'history': history_label(h), 'v': v} for (q, h), v in sorted(self.actions.items())]
        return pd.DataFrame(rows, columns=['stage', 'history', 'v'])


class BestReplyStrategy(UninformedStrategy):
    """Bayesian reply to a disclosed splitting-form strategy.

    The belief over (atom, state) is filtered along the observed actions; at
    stage q the player plays an optimal column strategy of H(t_q, M^_{t_q})
    where M^_{t_q} is the predicted law of the state given the history.
    """
    label = 'bestreply'

    def __init__(self, informed: InformedStrategy, spec: PayoffSpec):
        super().__init__(spec.n_v)
        self.informed = informed
        self.spec = spec
        self._joint: Dict[History, Joint] = {(): {informed.root: informed.prior.weights.copy()}}
        self._mixed: Dict[History, np.ndarray] = {}

    def joint(self, history: History) -> Joint:
        """Unnormalized mass of (atom, state at t_q) jointly with the history, q = len(history)."""
        history = tuple(history)
        if history not in self._joint:
            q = len(history) - 1
            parent = self.joint(history[:-1])
            emitted = self.informed.emit(q, self.informed.split_joint(q, parent), history[-1])
            self._joint[history] = self.informed.propagate(q, emitted)
        return self._joint[history]

    @staticmethod
    def _marginal(joint: Joint, what: str) -> np.ndarray:
        weights = np.sum(list(joint.values()), axis=0) if joint else np.zeros(1)
        if not weights.sum() > 0:
            raise ZeroProbabilityError(f'{what} has probability zero under the disclosed strategy')
        return weights

    def predicted(self, history: History) -> GridMeasure:
        """M^ at t_q, the law of the state given the first q informed actions."""
        weights = self._marginal(self.joint(history), f'history {history_label(history)!r}')
        return GridMeasure.normalized(self.informed.grid, weights)

    def posterior(self, history: History) -> GridMeasure:
        """Law of the state at t_{q-1} given the history up to and including u_{q-1}."""
        history = tuple(history)
        if not history:
            raise ConfigError('a posterior needs at least one observed action')
        q = len(history) - 1
        split = self.informed.split_joint(q, self.joint(history[:-1]))
        weights = self._marginal(self.informed.emit(q, split, history[-1]),
                                 f'history {history_label(history)!r}')
        return GridMeasure.normalized(self.informed.grid, weights)

    def mixed_action(self, q, history):
        history = tuple(history)
        if len(history) != q:
            raise ConfigError(f'history {history} does not match stage {q}')
        if history not in self._mixed:
            belief = self.predicted(history)
            self._mixed[history] = hamiltonian_value(
                self.spec, self.informed.partition.times[q], belief).optimal_col_mixed
        return self._mixed[history]


def make_uninformed_best_reply(informed: InformedStrategy, spec: PayoffSpec) -> BestReplyStrategy:
    return BestReplyStrategy(informed, spec)
