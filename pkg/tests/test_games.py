import numpy as np
import pytest
from scipy.optimize import linprog

from checks.oracles import support_enumeration_value
from games import (
    hamiltonian_value,
    isaacs_gap,
    lipschitz_probe,
    matrix_game_value,
    payoff_matrix,
    pure_bounds,
    simplex_method,
    time_lipschitz_probe,
)
from measures import GridMeasure, random_atomic_measure
from payoffs.base import FunctionPayoff
from payoffs.matching_pennies import MatchingPenniesX, stake
from utils.errors import GameShapeError, Infeasible, Unbounded


def linprog_value(A):
    """min over row mixes of the max column payoff, by scipy."""
    n_rows, n_cols = A.shape
    c = np.concatenate([np.zeros(n_rows), [1.0]])
    A_ub = np.hstack([A.T, -np.ones((n_cols, 1))])
    A_eq = np.concatenate([np.ones(n_rows), [0.0]])[None, :]
    bounds = [(0, None)] * n_rows + [(None, None)]
    result = linprog(c, A_ub=A_ub, b_ub=np.zeros(n_cols), A_eq=A_eq, b_eq=[1.0], bounds=bounds, method='highs')
    return result.fun


def test_matching_pennies_value():
    solution = matrix_game_value([[1.0, -1.0], [-1.0, 1.0]])
    assert solution.value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(solution.optimal_row_mixed, [0.5, 0.5])
    np.testing.assert_allclose(solution.optimal_col_mixed, [0.5, 0.5])


def test_saddle_point_value():
    A = np.array([[3.0, 1.0, 4.0], [2.0, 0.5, 1.5]])
    upper, lower = pure_bounds(A)
    assert upper == lower
    assert matrix_game_value(A).value == pytest.approx(upper)


def test_value_matches_linprog(rng):
    for shape in [(2, 2), (3, 4), (5, 3), (4, 4)]:
        for _ in range(10):
            A = rng.normal(size=shape)
            solution = matrix_game_value(A)
            assert solution.value == pytest.approx(linprog_value(A), abs=1e-9)
            # each mix guarantees the value against every pure reply
            assert (solution.optimal_row_mixed @ A).max() == pytest.approx(solution.value, abs=1e-9)
            assert (A @ solution.optimal_col_mixed).min() == pytest.approx(solution.value, abs=1e-9)
            upper, lower = pure_bounds(A)
            assert lower - 1e-12 <= solution.value <= upper + 1e-12


def test_value_is_shift_covariant(rng):
    A = rng.normal(size=(3, 3))
    assert matrix_game_value(A + 2.5).value == pytest.approx(matrix_game_value(A).value + 2.5)


def test_ragged_matrix_is_rejected():
    with pytest.raises(GameShapeError):
        matrix_game_value([[1.0, 2.0], [3.0]])
    with pytest.raises(GameShapeError):
        matrix_game_value(np.array([[np.nan, 1.0]]))


def test_simplex_against_linprog():
    c = np.array([-1.0, -2.0, 0.0, 0.0])
    A = np.array([[1.0, 1.0, 1.0, 0.0], [1.0, 3.0, 0.0, 1.0]])
    b = np.array([4.0, 6.0])
    result = simplex_method(c, A, b)
    expected = linprog(c, A_eq=A, b_eq=b, method='highs')
    assert result.value == pytest.approx(expected.fun)
    np.testing.assert_allclose(A @ result.x, b, atol=1e-10)


def test_simplex_infeasible_and_unbounded():
    with pytest.raises(Infeasible):
        simplex_method([1.0, 1.0], [[1.0, 1.0]], [-1.0])
    with pytest.raises(Unbounded):
        simplex_method([-1.0, 0.0], [[1.0, -1.0]], [1.0])


def test_hamiltonian_of_pennies(grid, two_point, pennies):
    a = two_point.expect(stake(grid.nodes))
    solution = hamiltonian_value(pennies, 0.0, two_point)
    assert solution.value == pytest.approx(MatchingPenniesX.closed_form(a), abs=1e-12)
    assert payoff_matrix(pennies, 0.0, two_point).shape == (2, 2)
    assert isaacs_gap(pennies, 0.0, two_point) > 0


def test_hamiltonian_is_lipschitz(grid, pennies, pursuit):
    assert lipschitz_probe(pennies, 50, grid) <= pennies.bound + 1e-6
    assert lipschitz_probe(pursuit, 50, grid) <= pursuit.bound + 1e-6
    assert time_lipschitz_probe(pennies, 20, grid) == 0.0


def test_pursuit_at_a_target_has_a_saddle(grid, pursuit):
    # at x = 1 the informed player heads for +1 and the guess of +1 costs it a unit
    m = GridMeasure.dirac(grid, 1.0)
    np.testing.assert_allclose(payoff_matrix(pursuit, 0.0, m), [[3.0, 2.0], [0.0, 1.0]])
    assert isaacs_gap(pursuit, 0.0, m) == 0.0
    assert hamiltonian_value(pursuit, 0.0, m).value == pytest.approx(1.0)


def test_value_matches_support_enumeration(rng):
    for k in range(100):
        size = 2 + k % 2
        A = rng.uniform(-1.0, 1.0, (size, size))
        assert matrix_game_value(A).value == pytest.approx(support_enumeration_value(A), abs=1e-8)


def test_support_enumeration_finds_saddles():
    assert support_enumeration_value([[3.0, 1.0, 4.0], [2.0, 0.5, 1.5]]) == pytest.approx(2.0)
    assert support_enumeration_value([[1.0, -1.0], [-1.0, 1.0]]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize('scale,offset', [(2.0, 0.0), (0.5, -1.25), (3.0, 0.7)])
def test_hamiltonian_is_affine_equivariant(grid, pennies, rng, scale, offset):
    rescaled = FunctionPayoff(lambda t, x, u, v: scale * pennies.evaluate(t, x, u, v) + offset,
                              pennies.n_u, pennies.n_v, scale * pennies.bound + abs(offset))
    for _ in range(10):
        m = random_atomic_measure(grid, rng, 6, 3.0)
        t = float(rng.uniform(0.0, 1.0))
        expected = scale * hamiltonian_value(pennies, t, m).value + offset
        assert hamiltonian_value(rescaled, t, m).value == pytest.approx(expected, abs=1e-9)
