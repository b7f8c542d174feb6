import numpy as np

from payoffs import register_payoff
from payoffs.base import PayoffSpec

TARGETS = np.array([-1.0, 1.0])
CAPTURE_COST = 1.0
DISTANCE_CAP = 2.0


@register_payoff('bimodal-pursuit')
class BimodalPursuit(PayoffSpec):
    """The informed player picks a target close to the state and pays a unit
    when the uninformed player guesses the same target."""

    def __init__(self, horizon: float = 1.0):
        super().__init__(len(TARGETS), len(TARGETS),
                         bound=CAPTURE_COST + DISTANCE_CAP, horizon=horizon)

    def evaluate(self, t, x, u, v):
        x = np.asarray(x, dtype=np.float64)
        u, v = np.asarray(u), np.asarray(v)
        distance = np.minimum(np.abs(x - TARGETS[u]), DISTANCE_CAP)
        return CAPTURE_COST * (u == v) + distance
