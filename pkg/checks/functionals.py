import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from games import hamiltonian_value
from measures import GridMeasure
from payoffs.base import PayoffSpec
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

TIERS = ('A1', 'A2', 'A3', 'unknown')


@dataclass(frozen=True)
class MeasureFunctional:
    """A function U(t, m) of time and a grid measure.

    ``tier`` records the regularity class the functional is claimed to be in:
    A1 bounded and continuous, A2 continuous with at most linear growth,
    A3 lower semi-continuous and d2-continuous.
    """
    evaluate: Callable[[float, GridMeasure], float]
    tier: str = 'unknown'
    name: str = 'U'

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ConfigError(f'unknown smoothness tier {self.tier!r}, expected one of {TIERS}')

    def __call__(self, t: float, m: GridMeasure) -> float:
        return float(self.evaluate(t, m))

    def __repr__(self):
        return f'MeasureFunctional({self.name}, tier={self.tier})'

    def shifted(self, c: float) -> 'MeasureFunctional':
        """U + c."""
        return MeasureFunctional(lambda t, m: self.evaluate(t, m) + c, self.tier, f'{self.name}{c:+g}')


def linear_functional(phi: Union[Callable[[np.ndarray], np.ndarray], np.ndarray],
                      name: str = 'linear') -> MeasureFunctional:
    """m -> integral of phi dm; phi is a function of the nodes or its values on them."""
    def evaluate(t, m):
        values = phi(m.grid.nodes) if callable(phi) else np.asarray(phi)
        return m.expect(values)

    return MeasureFunctional(evaluate, 'A2', name)


def second_moment_functional() -> MeasureFunctional:
    return MeasureFunctional(lambda t, m: m.expect(m.grid.nodes ** 2), 'unknown', 'second-moment')


def first_moment_functional() -> MeasureFunctional:
    return MeasureFunctional(lambda t, m: m.mean, 'A2', 'first-moment')


def time_affine_functional(slope: float, intercept: float = 0.0) -> MeasureFunctional:
    return MeasureFunctional(lambda t, m: slope * t + intercept, 'A1', f'{slope:g}*t{intercept:+g}')


def constant_functional(c: float = 0.0) -> MeasureFunctional:
    return MeasureFunctional(lambda t, m: c, 'A1', f'{c:g}')


def hamiltonian_functional(spec: PayoffSpec) -> MeasureFunctional:
    return MeasureFunctional(lambda t, m: hamiltonian_value(spec, t, m).value, 'A1', f'H[{spec.name}]')

