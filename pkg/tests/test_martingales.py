import numpy as np
import pytest

from martingales import (
    MartingaleTree,
    SplittingPlan,
    TreeNode,
    atom_probabilities,
    bayes_posterior_sample,
    constant_tree,
    d1_variation,
    expected_cost,
    jensen_check,
    mixture_tree,
    read_tree,
    riemann_error_bound,
    sample_atoms,
    tree_from_table,
    validate_tree,
    write_tree,
)
from measures import GridMeasure, heat_evolve, second_moment
from solvers import non_revealing_value
from utils.errors import InvalidTreeError, MeasureError, ZeroProbabilityError


@pytest.fixture
def revealing_plan(grid):
    left, right = GridMeasure.dirac(grid, -1.0), GridMeasure.dirac(grid, 1.0)
    return SplittingPlan(np.array([0.5, 0.5]), [left, right])


@pytest.fixture
def optimal_tree(table, uniform_id):
    return tree_from_table(table, uniform_id)


def corrupt(tree: MartingaleTree, node_id: int, belief: GridMeasure) -> MartingaleTree:
    nodes = [TreeNode(n.node_id, n.parent_id, n.time_index, n.prob, belief if n.node_id == node_id else n.belief)
             for n in tree.records()]
    return MartingaleTree(tree.partition, nodes)


def test_plan_must_average_to_prior(grid, revealing_plan, two_point):
    assert revealing_plan.barycenter.weights == pytest.approx(two_point.weights)
    with pytest.raises(MeasureError):
        SplittingPlan(np.array([0.5, 0.5]), revealing_plan.posteriors, prior=GridMeasure.dirac(grid, 0.0))
    with pytest.raises(MeasureError):
        SplittingPlan(np.array([0.7, 0.7]), revealing_plan.posteriors)
    with pytest.raises(MeasureError):
        SplittingPlan(np.array([1.0]), revealing_plan.posteriors)


def test_bayes_rule_on_separated_posteriors(grid, revealing_plan, rng):
    right = grid.index_of(1.0)
    np.testing.assert_allclose(atom_probabilities(revealing_plan, right), [0.0, 1.0])
    assert bayes_posterior_sample(revealing_plan, right, rng) == 1
    with pytest.raises(ZeroProbabilityError):
        atom_probabilities(revealing_plan, grid.index_of(0.0))


def test_sampled_atoms_follow_bayes_rule(two_point, rng):
    posteriors = [heat_evolve(GridMeasure.dirac(two_point.grid, x), 0.0, 0.5) for x in (-1.0, 1.0)]
    plan = SplittingPlan(np.array([0.3, 0.7]), posteriors)
    node = two_point.grid.index_of(0.25)
    draws = sample_atoms(plan, np.full(20_000, node), rng)
    expected = atom_probabilities(plan, node)
    assert np.bincount(draws, minlength=2) / len(draws) == pytest.approx(expected, abs=0.02)


def test_constant_tree_cost_is_non_revealing(two_point, pennies, partition):
    tree = constant_tree(partition, two_point)
    assert validate_tree(tree, two_point).passed
    assert expected_cost(tree, pennies) == pytest.approx(non_revealing_value(pennies, 0.0, two_point, partition))
    assert d1_variation(tree) == pytest.approx(0.0, abs=1e-12)


def test_optimal_tree_is_a_martingale(optimal_tree, table, pennies, uniform_id):
    report = validate_tree(optimal_tree, table.measure(0, [0.5, 0.5]))
    assert report.passed, report.first
    assert expected_cost(optimal_tree, pennies) == pytest.approx(table.value(0, uniform_id), abs=1e-9)
    assert d1_variation(optimal_tree) > 0.0
    assert riemann_error_bound(optimal_tree, pennies) > 0.0


def test_mean_measure_is_the_heat_flow(optimal_tree, partition):
    for q in range(partition.n_steps + 1):
        expected = heat_evolve(optimal_tree.prior, 0.0, partition.times[q]).weights
        np.testing.assert_allclose(optimal_tree.marginal(q), expected, atol=1e-9)


def test_jensen_inequality_on_the_optimal_tree(optimal_tree, partition):
    frame = jensen_check(optimal_tree, 0, 1, partition.n_steps)
    assert len(frame) > 0
    assert frame['passed'].all()
    with pytest.raises(InvalidTreeError):
        jensen_check(optimal_tree, 2, 1, 3)


def test_mixture_tree(grid, pennies, partition):
    left = constant_tree(partition, GridMeasure.dirac(grid, -1.0))
    right = constant_tree(partition, GridMeasure.dirac(grid, 1.0))
    mixed = mixture_tree(left, right, 0.25)
    assert validate_tree(mixed).passed
    expected = 0.25 * expected_cost(left, pennies) + 0.75 * expected_cost(right, pennies)
    assert expected_cost(mixed, pennies) == pytest.approx(expected, abs=1e-9)
    with pytest.raises(InvalidTreeError):
        mixture_tree(left, right, 1.5)


def test_corrupted_tree_is_reported(optimal_tree, grid, pennies):
    victim = optimal_tree.stage_nodes(1)[0]
    broken = corrupt(optimal_tree, victim, GridMeasure.dirac(grid, 2.0))
    report = validate_tree(broken)
    assert not report.passed
    assert report.first.constraint == 'heat-martingale'
    assert report.first.path[-1] == optimal_tree.nodes[victim].parent_id
    with pytest.raises(InvalidTreeError):
        expected_cost(broken, pennies)


def test_malformed_structure(two_point, partition):
    root = TreeNode(0, -1, 0, 1.0, two_point)
    with pytest.raises(InvalidTreeError):
        MartingaleTree(partition, [root, TreeNode(1, -1, 0, 1.0, two_point)])
    with pytest.raises(InvalidTreeError):
        MartingaleTree(partition, [root, TreeNode(1, 7, 1, 1.0, two_point)])
    report = validate_tree(MartingaleTree(partition, [root]))
    assert report.first.constraint == 'leaf-before-horizon'


def test_tree_file_reload(optimal_tree, pennies, tmp_path):
    path = str(tmp_path / 'tree.csv')
    write_tree(optimal_tree, path, ['winfo test'])
    reloaded = read_tree(path)
    assert len(reloaded) == len(optimal_tree)
    assert reloaded.partition == optimal_tree.partition
    assert expected_cost(reloaded, pennies) == pytest.approx(expected_cost(optimal_tree, pennies), abs=1e-12)


def test_tree_file_needs_header(tmp_path):
    path = tmp_path / 'bare.csv'
    path.write_text('node_id,parent_id,time_index,prob\n0,-1,0,1.0\n')
    with pytest.raises(InvalidTreeError):
        read_tree(str(path))


def test_second_moment_grows_along_the_optimal_tree(optimal_tree):
    for node_id in optimal_tree.preorder():
        children = [optimal_tree.nodes[c] for c in optimal_tree.children[node_id]]
        if not children:
            continue
        after = sum(c.prob * second_moment(c.belief) for c in children)
        assert after >= second_moment(optimal_tree.nodes[node_id].belief) - 1e-9


@pytest.mark.slow
def test_sampled_joint_law_of_state_and_atom(table, uniform_id):
    plan = table.plan(0, uniform_id)
    assert len(plan) > 1
    rng = np.random.default_rng(2022)
    n = 1_000_000
    prior = plan.barycenter.weights
    states = rng.choice(len(prior), size=n, p=prior / prior.sum())
    atoms = sample_atoms(plan, states, rng)
    nodes = plan.barycenter.grid.nodes
    for k, (weight, posterior) in enumerate(zip(plan.weights, plan.posteriors)):
        hits = atoms == k
        assert abs(hits.mean() - weight) <= 3 * np.sqrt(weight * (1.0 - weight) / n) + 1e-12
        sd = np.sqrt(posterior.expect(nodes ** 2) - posterior.mean ** 2)
        assert abs(nodes[states[hits]].mean() - posterior.mean) <= 3 * sd / np.sqrt(hits.sum()) + 1e-12
