from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils.errors import HorizonError

TIME_TOL = 1e-12


@dataclass(frozen=True)
class Partition:
    """Time grid t_0 < ... < t_N of the discrete game; N is the number of steps."""
    times: Tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times:
            raise HorizonError('a partition needs at least one time')
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise HorizonError(f'partition times must be strictly increasing: {times}')
        object.__setattr__(self, 'times', times)

    @classmethod
    def uniform(cls, start: float, horizon: float, n_steps: int) -> 'Partition':
        if n_steps == 0 and horizon == start:
            return cls((start,))
        if n_steps < 1 or not horizon > start:
            raise HorizonError(f'cannot split [{start}, {horizon}] into {n_steps} steps')
        times = np.linspace(start, horizon, n_steps + 1)
        times[-1] = horizon
        return cls(tuple(times))

    @property
    def start(self) -> float:
        return self.times[0]

    @property
    def horizon(self) -> float:
        return self.times[-1]

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def mesh(self) -> float:
        return float(self.steps.max()) if self.n_steps else 0.0

    def index_of(self, t: float) -> int:
        idx = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[idx] - t) > TIME_TOL * max(1.0, abs(t)):
            raise HorizonError(f'{t} is not a partition time')
        return idx

    def interval_of(self, t: float) -> int:
        """q with t_q <= t < t_{q+1}; the last step for t = T."""
        if t < self.start - TIME_TOL or t > self.horizon + TIME_TOL:
            raise HorizonError(f't={t} outside [{self.start}, {self.horizon}]')
        idx = int(np.searchsorted(self.times, t, side='right')) - 1
        return min(max(idx, 0), max(self.n_steps - 1, 0))
