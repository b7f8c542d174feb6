from .grid import (
    GridMeasure,
    SpatialGrid,
    clamp_pushforward,
    combine,
    moment_p,
    random_atomic_measure,
    second_moment,
    total_variation,
    wasserstein1,
    wasserstein2,
)
from .heat import (
    TransitionKernel,
    heat_evolve,
    heat_flow,
    heat_kernel,
    smoothed_density,
)

__all__ = [
    'GridMeasure',
    'SpatialGrid',
    'TransitionKernel',
    'clamp_pushforward',
    'combine',
    'heat_evolve',
    'heat_flow',
    'heat_kernel',
    'moment_p',
    'random_atomic_measure',
    'second_moment',
    'smoothed_density',
    'total_variation',
    'wasserstein1',
    'wasserstein2',
]
