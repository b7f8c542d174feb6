import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from measures import GridMeasure, combine
from utils.errors import MeasureError, ZeroProbabilityError

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12
BARYCENTER_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SplittingPlan:
    """Decomposition of ``prior`` into posteriors: prior = sum_k weights[k] posteriors[k].

    ``atom_ids`` name the posteriors (lattice point ids for solver plans).
    """
    weights: np.ndarray
    posteriors: Sequence[GridMeasure]
    atom_ids: Optional[np.ndarray] = None
    prior: Optional[GridMeasure] = None

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if len(weights) != len(self.posteriors) or not len(weights):
            raise MeasureError('a splitting plan needs one weight per posterior')
        if weights.min() < -WEIGHT_TOL or abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise MeasureError(f'splitting weights {weights} are not a probability vector')
        object.__setattr__(self, 'weights', np.clip(weights, 0.0, None))
        atom_ids = np.arange(len(weights)) if self.atom_ids is None else np.asarray(self.atom_ids)
        object.__setattr__(self, 'atom_ids', atom_ids)
        barycenter = self.barycenter
        if self.prior is None:
            object.__setattr__(self, 'prior', barycenter)
        else:
            residual = np.abs(barycenter.weights - self.prior.weights).max()
            if residual > BARYCENTER_TOL:
                raise MeasureError(f'posteriors do not average to the prior (residual {residual:.3e})')

    def __len__(self):
        return len(self.weights)

    @property
    def barycenter(self) -> GridMeasure:
        return combine(self.posteriors[0].grid, self.weights, self.posteriors)

    @property
    def stacked(self) -> np.ndarray:
        return np.stack([p.weights for p in self.posteriors])

    def joint(self) -> np.ndarray:
        """Joint law of (atom, state): entry [k, i] = weights[k] * posteriors[k](x_i)."""
        return self.weights[:, None] * self.stacked

    @classmethod
    def trivial(cls, m: GridMeasure, atom_id=0) -> 'SplittingPlan':
        return cls(np.ones(1), [m], np.array([atom_id]), m)


def atom_probabilities(plan: SplittingPlan, realized_x: int) -> np.ndarray:
    mass = plan.weights * plan.stacked[:, realized_x]
    total = mass.sum()
    if not total > 0:
        raise ZeroProbabilityError(f'the plan puts no mass on grid node {realized_x}')
    return mass / total


def bayes_posterior_sample(plan: SplittingPlan, realized_x: int, rng: np.random.Generator) -> int:
    """Index k drawn with probability proportional to weights[k] * posteriors[k](x)."""
    cdf = np.cumsum(atom_probabilities(plan, realized_x))
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side='right'))
    return min(k, len(cdf) - 1)


def sample_atoms(plan: SplittingPlan, realized_x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized ``bayes_posterior_sample`` over an array of realized nodes."""
    realized_x = np.asarray(realized_x, dtype=int)
    joint = plan.joint()[:, realized_x]
    total = joint.sum(axis=0)
    if np.any(total <= 0):
        bad = realized_x[np.flatnonzero(total <= 0)[0]]
        raise ZeroProbabilityError(f'the plan puts no mass on grid node {bad}')
    cdf = np.cumsum(joint, axis=0) / total
    draws = rng.random(len(realized_x))
    return np.minimum((cdf < draws[None, :]).sum(axis=0), len(plan) - 1)
