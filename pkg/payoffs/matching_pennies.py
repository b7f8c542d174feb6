import numpy as np

from payoffs import register_payoff
from payoffs.base import PayoffSpec

# actions of both players
HEADS, TAILS = 0, 1
PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])


def stake(x):
    """Share of the stake carried by 'heads' at state x, in (0, 1)."""
    return 0.5 * (1.0 + np.tanh(x))


@register_payoff('matching-pennies-x')
class MatchingPenniesX(PayoffSpec):
    """Matching pennies whose stakes depend on the hidden state.

    The informed player pays ``stake(x)`` when both show heads and
    ``1 - stake(x)`` when both show tails, nothing on a mismatch.  With
    ``a = E_m[stake]`` the stage game has mixed value ``a (1 - a)``, which is
    concave in the belief, so revealing information lowers the cost.
    """

    def __init__(self, horizon: float = 1.0):
        super().__init__(2, 2, bound=1.0, horizon=horizon)

    def evaluate(self, t, x, u, v):
        s = stake(np.asarray(x, dtype=np.float64))
        u, v = np.asarray(u), np.asarray(v)
        return s * ((u == HEADS) & (v == HEADS)) + (1.0 - s) * ((u == TAILS) & (v == TAILS))

    @staticmethod
    def closed_form(a: float) -> float:
        return a * (1.0 - a)


@register_payoff('linear-pennies')
class LinearPennies(PayoffSpec):
    """f = x * g(u, v) with g matching pennies; H vanishes identically."""

    def __init__(self, half_width: float = 8.0, horizon: float = 1.0):
        super().__init__(2, 2, bound=max(1.0, half_width), horizon=horizon)

    @classmethod
    def build_payoff(cls, cfg):
        return cls(half_width=cfg.half_width, horizon=cfg.horizon)

    def evaluate(self, t, x, u, v):
        return np.asarray(x, dtype=np.float64) * PENNIES[u, v]
