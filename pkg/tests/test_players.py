import numpy as np
import pandas as pd
import pytest

from martingales import expected_cost, tree_from_table
from measures import GridMeasure
from players import (
    PureUninformedStrategy,
    UniformStrategy,
    evaluate_exact,
    evaluate_monte_carlo,
    full_revealing_strategy,
    history_label,
    liminf_bound_check,
    make_informed_strategy,
    make_uninformed_best_reply,
    nonrevealing_strategy,
    parse_history,
    strategy_from_tree,
    upper_guarantee_check,
)
from players.evaluation import PlayoutRecord
from solvers import Partition, non_revealing_value
from utils.errors import ConfigError, EnumerationBudgetError, MeasureError


@pytest.fixture(scope='module')
def prior(table):
    return table.measure(0, [0.5, 0.5])


@pytest.fixture(scope='module')
def strategies(table, lattice, partition, pennies, uniform_id):
    return {
        'optimal': make_informed_strategy(table, pennies, uniform_id),
        'nonrevealing': nonrevealing_strategy(lattice, partition, pennies, uniform_id),
        'fullrevealing': full_revealing_strategy(lattice, partition, pennies, uniform_id),
    }


def test_history_labels():
    assert history_label((0, 1, 1)) == '0-1-1'
    assert parse_history('0-1-1') == (0, 1, 1)
    assert parse_history('') == ()
    assert parse_history(np.nan) == ()


def test_pure_strategy_table(tmp_path):
    frame = pd.DataFrame({'stage': [0, 1, 1], 'history': ['', '0', '1'], 'v': [1, 0, 1]})
    tau = PureUninformedStrategy.from_frame(frame, 2)
    assert tau.action(1, (1,)) == 1
    np.testing.assert_array_equal(tau.mixed_action(0, ()), [0.0, 1.0])
    assert tau.to_frame()['v'].tolist() == [1, 0, 1]
    with pytest.raises(ConfigError):
        PureUninformedStrategy.from_frame(frame.assign(v=[3, 0, 0]), 2)
    with pytest.raises(ConfigError):
        PureUninformedStrategy.from_frame(frame.drop(columns='history'), 2)


def test_every_pure_strategy_is_enumerated():
    assert sum(1 for _ in PureUninformedStrategy.enumerate(2, 3, 2)) == 2 ** 7


def test_optimal_strategy_announces_the_value(strategies, table, pennies, uniform_id):
    sigma = strategies['optimal']
    assert expected_cost(sigma.tree(), pennies) == pytest.approx(table.value(0, uniform_id), abs=1e-9)


def test_nonrevealing_strategy_cost(strategies, pennies, partition, prior):
    cost = expected_cost(strategies['nonrevealing'].tree(), pennies)
    assert cost == pytest.approx(non_revealing_value(pennies, 0.0, prior, partition))


@pytest.mark.parametrize('name', ['optimal', 'nonrevealing', 'fullrevealing'])
def test_no_pure_reply_beats_the_guarantee(strategies, pennies, partition, prior, name):
    report = upper_guarantee_check(strategies[name], pennies, partition, prior)
    assert report.n_replies == 128
    assert report.passed, report


@pytest.mark.parametrize('name', ['optimal', 'nonrevealing', 'fullrevealing'])
def test_best_reply_secures_the_lower_bound(strategies, pennies, partition, prior, name):
    report = liminf_bound_check(strategies[name], pennies, partition, prior)
    assert report.passed, report
    assert report.gamma <= expected_cost(strategies[name].tree(), pennies) + 1e-9


def test_best_reply_against_nonrevealing_gets_the_guarantee(strategies, pennies, partition, prior):
    sigma = strategies['nonrevealing']
    gamma = evaluate_exact(sigma, make_uninformed_best_reply(sigma, pennies), pennies, partition, prior)
    assert gamma == pytest.approx(expected_cost(sigma.tree(), pennies), abs=1e-9)


def test_best_reply_beliefs(strategies, pennies, prior):
    tau = make_uninformed_best_reply(strategies['optimal'], pennies)
    np.testing.assert_allclose(tau.predicted(()).weights, prior.weights)
    # before any action the reply plays the column mix of H at the prior
    np.testing.assert_allclose(tau.mixed_action(0, ()), [0.5, 0.5], atol=1e-9)
    with pytest.raises(ConfigError):
        tau.mixed_action(1, ())
    with pytest.raises(ConfigError):
        tau.posterior(())


def test_enumeration_budget(strategies, pennies, partition, prior):
    with pytest.raises(EnumerationBudgetError):
        evaluate_exact(strategies['optimal'], UniformStrategy(2), pennies, partition, prior, cap=4)
    with pytest.raises(EnumerationBudgetError):
        upper_guarantee_check(strategies['optimal'], pennies, partition, prior, cap=1000)


def test_initial_law_must_match(strategies, pennies, partition, grid):
    with pytest.raises(MeasureError):
        evaluate_exact(strategies['optimal'], UniformStrategy(2), pennies, partition, GridMeasure.dirac(grid, 0.0))


def test_monte_carlo_agrees_with_enumeration(strategies, pennies, partition, prior):
    sigma = strategies['optimal']
    tau = make_uninformed_best_reply(sigma, pennies)
    exact = evaluate_exact(sigma, tau, pennies, partition, prior)
    result = evaluate_monte_carlo(sigma, tau, pennies, partition, prior, 4000, seed=7, batch_size=512)
    assert result.n_samples == 4000
    assert abs(result.mean - exact) <= 4.0 * result.std_error


def test_monte_carlo_is_thread_independent(strategies, pennies, partition, prior):
    sigma = strategies['fullrevealing']
    tau = UniformStrategy(2)
    serial = evaluate_monte_carlo(sigma, tau, pennies, partition, prior, 600, seed=11, batch_size=128,
                                  threads=1, record=True)
    threaded = evaluate_monte_carlo(sigma, tau, pennies, partition, prior, 600, seed=11, batch_size=128,
                                    threads=4, record=True)
    assert serial.mean == threaded.mean
    pd.testing.assert_frame_equal(serial.playouts, threaded.playouts)


def test_playouts_add_up(strategies, pennies, partition, prior):
    result = evaluate_monte_carlo(strategies['optimal'], UniformStrategy(2), pennies, partition, prior, 50,
                                  seed=3, record=True)
    records = PlayoutRecord.from_frame(result.playouts)
    assert len(records) == 50
    assert all(len(r.actions) == partition.n_steps for r in records)
    assert np.mean([r.total for r in records]) == pytest.approx(result.mean)
    with pytest.raises(MeasureError):
        evaluate_monte_carlo(strategies['optimal'], UniformStrategy(2), pennies, partition, prior, 0, seed=3)


def test_strategy_from_tree_reproduces_the_optimal_play(strategies, table, pennies, partition, prior,
                                                       uniform_id):
    tree = tree_from_table(table, uniform_id)
    sigma = strategy_from_tree(tree, pennies)
    assert sigma.label == 'tree'
    assert expected_cost(sigma.tree(), pennies) == pytest.approx(expected_cost(tree, pennies), abs=1e-9)
    tau = UniformStrategy(2)
    assert evaluate_exact(sigma, tau, pennies, partition, prior) == pytest.approx(
        evaluate_exact(strategies['optimal'], tau, pennies, partition, prior), abs=1e-9)


class HistoryLog(UniformStrategy):
    def __init__(self, n_v):
        super().__init__(n_v)
        self.seen = []

    def mixed_action(self, q, history):
        self.seen.append((q, history))
        return super().mixed_action(q, history)


def test_monte_carlo_keeps_long_histories(lattice, pennies, uniform_id):
    # 2**70 histories do not fit in an int64 code
    partition = Partition.uniform(0.0, 1.0, 70)
    sigma = nonrevealing_strategy(lattice, partition, pennies, uniform_id)
    tau = HistoryLog(2)
    result = evaluate_monte_carlo(sigma, tau, pennies, partition, sigma.prior, 16, seed=5, record=True)
    assert all(len(history) == q for q, history in tau.seen)
    frame = result.playouts[result.playouts['stage'] < 69]
    played = {tuple(group['u'].tolist()) for _, group in frame.groupby('sample_id')}
    assert {history for q, history in tau.seen if q == 69} == played
