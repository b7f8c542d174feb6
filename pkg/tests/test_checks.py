import numpy as np
import pytest

from checks import (
    CheckReport,
    barrier_check,
    comparison_check,
    constant_functional,
    explicit_solution,
    first_moment_functional,
    flat_derivative,
    flow_derivative_check,
    generator,
    hamiltonian_functional,
    intrinsic_derivative,
    linear_functional,
    non_revealing_functional,
    psi_delta,
    psi_delta_flat_derivative,
    psi_delta_separation,
    quadrature_nodes,
    random_flow_samples,
    second_moment_functional,
    separation_radius,
    subsolution_flow_check,
    support_window,
    time_affine_functional,
    truncated_hamiltonian,
    truncation_check,
)
from checks.functionals import MeasureFunctional
from measures import GridMeasure, heat_evolve, random_atomic_measure
from solvers import Partition, non_revealing_value
from utils.errors import ConfigError, HorizonError, MeasureError


@pytest.fixture
def anchor(grid):
    return GridMeasure.from_atoms(grid, [-1.0, 1.0], [0.7, 0.3])


def test_unknown_tier():
    with pytest.raises(ConfigError):
        MeasureFunctional(lambda t, m: 0.0, tier='A4')


def test_report_rows():
    report = CheckReport('demo')
    report.inequality('le', 0.0, 0, 1.0, 2.0, 0.0)
    report.equality('eq', 0.0, 1, 1.0, 1.0 + 1e-12, 1e-9)
    assert report.passed
    report.inequality('le', 0.0, 2, 3.0, 2.0, 1e-3)
    assert not report.passed
    assert report.worst.point_id == 2
    assert report.log_dict['failed'] == 1
    assert list(report.to_frame().columns) == ['check_name', 't', 'point_id', 'lhs', 'rhs', 'slack', 'passed']
    report = CheckReport('demo')
    report.update('nan', 0.0, 0, np.nan, 0.0, np.nan)
    assert not report.passed


def test_flat_derivative_of_linear_functional(anchor, rng):
    values = rng.uniform(-1.0, 1.0, anchor.grid.n_points)
    flat = flat_derivative(linear_functional(values), 0.5, anchor)
    np.testing.assert_allclose(flat, values - anchor.expect(values), atol=1e-9)
    assert anchor.weights[anchor.support] @ flat[anchor.support] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(MeasureError):
        flat_derivative(linear_functional(values), 0.5, anchor, r=1.5)


def test_flat_derivative_only_where_asked(anchor):
    window = support_window(anchor, 1)
    flat = flat_derivative(second_moment_functional(), 0.5, anchor, indices=window)
    assert np.isnan(flat).sum() == anchor.grid.n_points - len(window)
    intrinsic, divergence = intrinsic_derivative(flat, anchor.grid.spacing, anchor.support)
    # D_m of x^2 is 2x, its divergence 2
    np.testing.assert_allclose(intrinsic, 2.0 * anchor.grid.nodes[anchor.support], atol=1e-6)
    np.testing.assert_allclose(divergence, 2.0, atol=1e-6)


def test_generator_of_moments(anchor):
    assert generator(second_moment_functional(), 0.5, anchor).value == pytest.approx(1.0, abs=1e-6)
    assert generator(first_moment_functional(), 0.5, anchor).value == pytest.approx(0.0, abs=1e-6)
    assert generator(time_affine_functional(0.7), 0.5, anchor).value == pytest.approx(0.7, abs=1e-9)


def test_generator_is_one_sided_at_the_ends(anchor):
    result = generator(time_affine_functional(0.7), 1.0, anchor)
    assert result.one_sided
    assert result.value == pytest.approx(0.7)
    with pytest.raises(HorizonError):
        generator(time_affine_functional(0.7), 1.5, anchor)


def test_boundary_support_has_no_divergence(grid):
    edge = GridMeasure.dirac(grid, grid.half_width)
    with pytest.raises(MeasureError):
        generator(second_moment_functional(), 0.5, edge)


def test_flow_quotients_of_second_moment(anchor):
    report = flow_derivative_check(second_moment_functional(), 0.25, anchor, dt=0.05)
    np.testing.assert_allclose(report.quotients, 1.0, atol=1e-6)
    assert report.exact
    assert report.residual == pytest.approx(0.0, abs=1e-5)
    assert report.normalization == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(HorizonError):
        flow_derivative_check(second_moment_functional(), 0.99, anchor, dt=0.05)


def test_non_revealing_functional_solves_its_equation(pennies, anchor):
    U0 = non_revealing_functional(pennies, 1.0, n_quad=32)
    H = hamiltonian_functional(pennies)
    report = flow_derivative_check(U0, 0.5, anchor, dt=0.05)
    assert report.generator + H(0.5, anchor) == pytest.approx(0.0, abs=5e-2)
    assert report.residual == pytest.approx(0.0, abs=5e-2)
    assert U0(1.0, anchor) == 0.0


def test_quadrature_nodes():
    flow_times, positions, weights = quadrature_nodes(0.0, 1.0, 4)
    np.testing.assert_allclose(flow_times[positions], [0.125, 0.375, 0.625, 0.875])
    assert weights.sum() == pytest.approx(1.0)
    partition = Partition.uniform(0.0, 1.0, 4)
    flow_times, positions, weights = quadrature_nodes(0.25, 1.0, partition=partition)
    np.testing.assert_allclose(flow_times[positions], [0.25, 0.5, 0.75])
    with pytest.raises(HorizonError):
        quadrature_nodes(0.5, 0.25)


def test_explicit_solution_cases(anchor):
    # F = 0 and psi the second moment: phi(t, m) = |m|^2 + (t1 - t)
    phi = explicit_solution(constant_functional(0.0), second_moment_functional(), 1.0, 2)
    assert phi(0.25, anchor) == pytest.approx(1.0 + 0.75, abs=1e-9)
    # F = 1 and psi = 0: phi = t1 - t
    phi = explicit_solution(constant_functional(1.0), constant_functional(0.0), 1.0)
    assert phi(0.4, anchor) == pytest.approx(0.6)
    assert phi.tier == 'A1'
    with pytest.raises(HorizonError):
        phi(1.5, anchor)


def test_explicit_solution_on_a_partition_matches_the_left_sum(pennies, anchor):
    partition = Partition.uniform(0.0, 1.0, 4)
    U0 = non_revealing_functional(pennies, 1.0, partition=partition)
    assert U0(0.0, anchor) == pytest.approx(non_revealing_value(pennies, 0.0, anchor, partition), abs=1e-12)


def test_subsolution_checks(pennies, grid, rng):
    measures = [random_atomic_measure(grid, rng, radius=2.0) for _ in range(4)]
    samples = random_flow_samples(measures, np.linspace(0.0, 1.0, 5), rng)
    assert all(t0 < s for t0, _, s in samples)
    U0 = non_revealing_functional(pennies, 1.0, n_quad=16)
    assert subsolution_flow_check(U0, pennies, samples, n_quad=16).passed
    lower = time_affine_functional(pennies.bound, -pennies.bound)
    assert subsolution_flow_check(lower, pennies, samples, n_quad=16).passed
    # falling faster than H can make up along the flow
    steep = time_affine_functional(-5.0)
    assert not subsolution_flow_check(steep, pennies, samples, n_quad=16).passed


def test_value_table_is_a_discrete_subsolution(table, pennies, partition, lattice, rng):
    samples = []
    for _ in range(4):
        q, p = np.sort(rng.choice(len(partition.times), size=2, replace=False))
        samples.append((partition.times[q], table.measure(q, rng.dirichlet(np.ones(lattice.size))),
                        partition.times[p]))
    report = subsolution_flow_check(table.as_functional(), pennies, samples, partition)
    assert report.passed


def test_comparison_with_shifted_solution(pennies, grid, rng):
    H = hamiltonian_functional(pennies)
    psi = first_moment_functional()
    samples = [(float(rng.uniform(0.0, 1.0)), random_atomic_measure(grid, rng, radius=2.0)) for _ in range(3)]
    phi = explicit_solution(H, psi, 1.0, 16)
    assert comparison_check(phi, H, psi, 1.0, samples, 16).passed
    shifted = comparison_check(phi.shifted(-0.1), H, psi, 1.0, samples, 16)
    assert shifted.passed
    assert shifted.to_frame()['slack'].min() == pytest.approx(0.1, abs=1e-9)


def test_comparison_needs_terminal_order(pennies, grid, rng):
    H = hamiltonian_functional(pennies)
    psi = first_moment_functional()
    samples = [(0.5, random_atomic_measure(grid, rng, radius=2.0)) for _ in range(3)]
    above = explicit_solution(H, psi, 1.0, 16).shifted(0.1)
    report = comparison_check(above, H, psi, 1.0, samples, 16)
    assert not report.passed
    assert report.skipped


def test_truncation(pennies, grid, rng):
    measures = [random_atomic_measure(grid, rng) for _ in range(20)]
    assert truncation_check(pennies, 2.0, measures).passed
    inside = random_atomic_measure(grid, rng, radius=2.0)
    H, H_tilde = hamiltonian_functional(pennies), truncated_hamiltonian(pennies, 2.0)
    assert H_tilde(0.0, inside) == pytest.approx(H(0.0, inside), abs=1e-12)
    with pytest.raises(MeasureError):
        truncated_hamiltonian(pennies, 0.0)


def test_psi_delta_vanishes_at_its_anchor(anchor):
    assert psi_delta(anchor, anchor, 0.05) == pytest.approx(0.0, abs=1e-12)
    evolved = heat_evolve(anchor, 0.0, 0.5)
    assert psi_delta(evolved, anchor, 0.05) > 0.0


def test_psi_delta_separation(anchor, grid, rng):
    candidates = [random_atomic_measure(grid, rng) for _ in range(40)]
    result = psi_delta_separation(anchor, 0.05, candidates)
    assert result.nu == pytest.approx(separation_radius(0.05))
    assert result.passed


def test_psi_delta_flat_derivative_closed_form(anchor):
    m = GridMeasure.from_atoms(anchor.grid, [0.5, 2.0], [0.6, 0.4])
    window = support_window(m)
    psi = MeasureFunctional(lambda t, mm: psi_delta(mm, anchor, 0.05), 'A2', 'psi')
    numeric = flat_derivative(psi, 0.0, m, 1e-7, indices=window)
    closed = psi_delta_flat_derivative(m, anchor, 0.05)
    np.testing.assert_allclose(numeric[window], closed[window], atol=1e-3)


def test_barrier_check(anchor, grid, rng):
    measures = [random_atomic_measure(grid, rng, radius=3.0) for _ in range(10)]
    report = barrier_check(anchor, 0.05, measures, derivative_tol=1e-3)
    assert report.passed, report.worst
    names = set(report.to_frame()['check_name'])
    assert {'psi-zero', 'psi-nonnegative', 'psi-upper-bound', 'psi-separation', 'psi-flat-derivative'} <= names
