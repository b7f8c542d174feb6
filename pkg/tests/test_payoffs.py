import numpy as np
import pandas as pd
import pytest

from games import hamiltonian_value, time_lipschitz_probe
from measures import GridMeasure
from payoffs import PAYOFF_REGISTRY, build_payoff
from payoffs.base import constant_matrix_payoff
from payoffs.table_payoff import TablePayoff
from utils.errors import ConfigError, HorizonError, UnknownSpecError


class Namespace:
    def __init__(self, **kwargs):
        self.__dict__.update(kwargs)


def test_registry_holds_the_builtin_payoffs():
    assert {'matching-pennies-x', 'linear-pennies', 'bimodal-pursuit', 'table'} <= set(PAYOFF_REGISTRY)


def test_unknown_payoff():
    with pytest.raises(UnknownSpecError):
        build_payoff(Namespace(payoff='no-such-game', horizon=1.0))


@pytest.mark.parametrize('name', ['matching-pennies-x', 'linear-pennies', 'bimodal-pursuit'])
def test_declared_constant_holds(grid, name):
    spec = build_payoff(Namespace(payoff=name, horizon=1.0, half_width=grid.half_width))
    report = spec.spot_check(grid, samples=500)
    assert report['bound_ratio'] <= 1.0 + 1e-9
    assert report['lipschitz_ratio'] <= 1.0 + 1e-9


def test_tensor_shape_and_horizon(grid, pennies):
    assert pennies.tensor(0.5, grid).shape == (grid.n_points, 2, 2)
    with pytest.raises(HorizonError):
        pennies.tensor(1.5, grid)


def test_linear_pennies_has_zero_hamiltonian(grid, rng):
    spec = build_payoff(Namespace(payoff='linear-pennies', horizon=1.0, half_width=grid.half_width))
    for _ in range(5):
        weights = rng.dirichlet(np.ones(grid.n_points))
        assert hamiltonian_value(spec, 0.0, GridMeasure(grid, weights)).value == pytest.approx(0.0, abs=1e-12)


def test_constant_matrix_payoff_ignores_state(grid, two_point):
    spec = constant_matrix_payoff([[0.0, 2.0], [3.0, 1.0]])
    assert hamiltonian_value(spec, 0.0, two_point).value == pytest.approx(1.5)
    assert hamiltonian_value(spec, 0.0, GridMeasure.dirac(grid, 3.0)).value == pytest.approx(1.5)


def table_frame(xs, ts=(0.0,)):
    rows = [{'t': t, 'x': x, 'u': u, 'v': v, 'f': x * (1 if u == v else -1) + t}
            for t in ts for x in xs for u in range(2) for v in range(2)]
    return pd.DataFrame(rows)


def test_table_payoff_interpolates_and_clamps():
    spec = TablePayoff(table_frame([-2.0, 0.0, 2.0], ts=(0.0, 1.0)))
    assert spec.evaluate(0.5, 1.0, 0, 0) == pytest.approx(1.5)
    assert spec.evaluate(0.0, 1.0, 0, 1) == pytest.approx(-1.0)
    # outside the tabulated box the nearest edge is used
    assert spec.evaluate(0.0, 5.0, 1, 1) == pytest.approx(2.0)
    assert spec.bound == pytest.approx(3.0)


def test_table_payoff_rejects_holes():
    frame = table_frame([-1.0, 1.0]).iloc[1:]
    with pytest.raises(ConfigError):
        TablePayoff(frame)
    with pytest.raises(ConfigError):
        TablePayoff(table_frame([-1.0, 1.0]).drop(columns='f'))


def test_table_payoff_from_config(tmp_path):
    path = tmp_path / 'payoff.csv'
    table_frame([-1.0, 1.0]).to_csv(path, index=False)
    spec = build_payoff(Namespace(payoff='table', payoff_table=str(path), horizon=1.0))
    assert (spec.n_u, spec.n_v) == (2, 2)
    with pytest.raises(ConfigError):
        build_payoff(Namespace(payoff='table', payoff_table=None, horizon=1.0))


def test_time_dependent_table_shifts_the_hamiltonian(grid):
    # f(t, ...) = f(0, ...) + t, so H moves one for one with t
    spec = TablePayoff(table_frame([-2.0, 0.0, 2.0], ts=(0.0, 1.0)))
    assert time_lipschitz_probe(spec, 10, grid) == pytest.approx(1.0, abs=1e-6)
