import logging
import platform
import time
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
import pandas as pd
import scipy
from tqdm import tqdm

from checks import (
    CheckReport,
    barrier_check,
    comparison_check,
    explicit_solution,
    first_moment_functional,
    flat_derivative,
    flow_derivative_check,
    generator,
    hamiltonian_functional,
    linear_functional,
    non_revealing_functional,
    random_flow_samples,
    second_moment_functional,
    subsolution_flow_check,
    support_window,
    time_affine_functional,
    truncated_hamiltonian,
    truncation_check,
)
from checks.functionals import MeasureFunctional
from checks.oracles import pairwise_value_recursion, support_enumeration_value, wasserstein_lp
from games import lipschitz_probe, matrix_game_value
from martingales import (
    constant_tree,
    expected_cost,
    jensen_check,
    mixture_tree,
    read_tree,
    sample_atoms,
    tree_from_table,
    validate_tree,
)
from measures import (
    GridMeasure,
    heat_evolve,
    random_atomic_measure,
    second_moment,
    total_variation,
    wasserstein1,
    wasserstein2,
)
from players import (
    full_revealing_strategy,
    liminf_bound_check,
    make_informed_strategy,
    nonrevealing_strategy,
    upper_guarantee_check,
)
from solvers import Partition, ValueSolver, convergence_study, non_revealing_value, solve_value
from utils.file_utils import VERSION, write_frame

from runners.base import BaseRunner

logger = logging.getLogger(__name__)

SUITES = ['generator', 'flow', 'subsolution', 'psi-delta', 'comparison', 'truncation', 'martingale',
          'wasserstein', 'heat', 'matrix-game', 'value-oracle', 'sandwich', 'convergence', 'strategy',
          'reproducibility']
RUN_REPORT_COLUMNS = ['suite', 'passed', 'n_checks', 'n_failed', 'worst_check', 'worst_slack', 'seconds']


def environment_fingerprint() -> Dict[str, str]:
    return {
        'winfo': VERSION,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
        'platform': platform.platform(),
    }


@dataclass
class RunReport:
    """One row per suite run, with the environment and config hash it ran under."""
    config_hash: str
    rows: List[dict] = field(default_factory=list)
    fingerprint: Dict[str, str] = field(default_factory=environment_fingerprint)

    def update(self, report: CheckReport, seconds: float):
        worst = report.worst
        self.rows.append({
            'suite': report.suite,
            'passed': report.passed,
            'n_checks': len(report.rows),
            'n_failed': sum(not row.passed for row in report.rows) + len(report.skipped),
            'worst_check': '' if worst is None else f'{worst.check_name}@{worst.point_id}',
            'worst_slack': np.nan if worst is None else worst.slack,
            'seconds': seconds,
        })

    @property
    def passed(self) -> bool:
        return all(row['passed'] for row in self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=RUN_REPORT_COLUMNS)

    def header(self) -> List[str]:
        return [f'{key}={value}' for key, value in self.fingerprint.items()]


class CheckRunner(BaseRunner):
    """Runs the numerical check suites and writes report.csv and run_report.csv."""

    def __init__(self, cfg, output_dir):
        super().__init__(cfg, output_dir)
        check = cfg.check
        self.which = check['which']
        self.samples = int(check['samples'])
        self.seed = int(check['seed'])
        self.flat_step = float(check['flat_step'])
        self.dt = float(check['dt'])
        self.n_quad = int(check['n_quad'])
        self.delta = float(check['psi_delta'])
        self.radius = float(check['truncation_radius'])
        self.tree_file = check['tree_file']
        self.tol = cfg.tolerance
        self.anchor = GridMeasure.from_atoms(self.grid, cfg.support, check['flow_weights'])
        self.mid_time = 0.5 * (cfg.start + cfg.horizon)
        self._table = None

    @property
    def table(self):
        if self._table is None:
            self._table = self.solve()
        return self._table

    def rng(self, suite: str) -> np.random.Generator:
        """Independent stream per suite so that selecting suites does not change their samples."""
        return np.random.default_rng([self.seed, SUITES.index(suite)])

    def random_measures(self, rng, count: int, radius: float = 4.0) -> List[GridMeasure]:
        return [random_atomic_measure(self.grid, rng, 6, radius) for _ in range(count)]

    def U0(self) -> MeasureFunctional:
        return non_revealing_functional(self.spec, self.cfg.horizon, self.n_quad)

    def check_generator(self) -> CheckReport:
        report = CheckReport('generator')
        t, m, tol = self.mid_time, self.anchor, self.tol
        kwargs = dict(r=self.flat_step, start=self.cfg.start, horizon=self.cfg.horizon, threads=self.threads)
        report.equality('generator[second-moment]', t, 0,
                        generator(second_moment_functional(), t, m, **kwargs).value, 1.0, tol['generator'])
        report.equality('generator[first-moment]', t, 0,
                        generator(first_moment_functional(), t, m, **kwargs).value, 0.0, tol['generator'])

        window = support_window(m)
        rng = self.rng('generator')
        for k in range(20):
            values = rng.uniform(-1.0, 1.0, self.grid.n_points)
            flat = flat_derivative(linear_functional(values), t, m, self.flat_step, indices=window)
            closed = values - m.expect(values)
            report.equality('flat-linear', t, k, float(np.abs(flat[window] - closed[window]).max()), 0.0,
                            tol['identity'])
            report.equality('flat-normalization', t, k, float(m.weights[m.support] @ flat[m.support]), 0.0,
                            tol['identity'])

        H = hamiltonian_functional(self.spec)
        value = generator(self.U0(), t, m, **kwargs).value
        report.equality('generator[U0]+H', t, 0, value + H(t, m), 0.0, tol['residual'])
        return report

    def check_flow(self) -> CheckReport:
        report = CheckReport('flow')
        t, m, tol = self.mid_time, self.anchor, self.tol
        kwargs = dict(dt=self.dt, r=self.flat_step, start=self.cfg.start, horizon=self.cfg.horizon,
                      threads=self.threads)

        moment = flow_derivative_check(second_moment_functional(), t, m, **kwargs)
        report.equality('flow[second-moment]', t, 0, moment.quotients[0], 1.0, tol['generator'])
        report.equality('flow-generator[second-moment]', t, 0, moment.extrapolated, moment.generator,
                        tol['generator'])
        affine = flow_derivative_check(time_affine_functional(0.7), t, m, **kwargs)
        report.equality('flow[affine-in-time]', t, 0, affine.quotients[0], 0.7, tol['generator'])
        report.equality('flow-generator[affine-in-time]', t, 0, affine.generator, 0.7, tol['generator'])

        solution = flow_derivative_check(self.U0(), t, m, **kwargs)
        report.equality('flow-generator[U0]', t, 0, solution.extrapolated, solution.generator, tol['residual'])
        q1, q2, q3 = solution.quotients
        converged = max(abs(q1 - q2), abs(q2 - q3)) < tol['generator']
        report.update('flow-order[U0]', t, 0, solution.order, tol['order'],
                      0.0 if converged or solution.exact else solution.order - tol['order'])
        report.equality('flow-normalization[U0]', t, 0, solution.normalization, 0.0, tol['identity'])
        return report

    def check_subsolution(self) -> CheckReport:
        cfg, tol = self.cfg, self.tol['subsolution']
        rng = self.rng('subsolution')
        times = np.linspace(cfg.start, cfg.horizon, 5)
        samples = random_flow_samples(self.random_measures(rng, self.samples, 3.0), times, rng)
        report = subsolution_flow_check(self.U0(), self.spec, samples, n_quad=self.n_quad, tol=tol,
                                        threads=self.threads)
        lower = time_affine_functional(self.spec.bound, -self.spec.bound * cfg.horizon)
        report.extend(subsolution_flow_check(lower, self.spec, samples, n_quad=self.n_quad, tol=tol,
                                             threads=self.threads))

        table, partition = self.table, self.partition
        value_samples = []
        for _ in range(self.samples):
            q, p = np.sort(rng.choice(len(partition.times), size=2, replace=False))
            coords = rng.dirichlet(np.ones(self.lattice.size))
            value_samples.append((partition.times[q], table.measure(q, coords), partition.times[p]))
        report.extend(subsolution_flow_check(table.as_functional(), self.spec, value_samples, partition,
                                             tol=tol, threads=self.threads))
        return report

    def check_psi_delta(self) -> CheckReport:
        rng = self.rng('psi-delta')
        return barrier_check(self.anchor, self.delta, self.random_measures(rng, self.samples),
                             tol=self.tol['psi'], derivative_tol=self.tol['generator'])

    def check_comparison(self) -> CheckReport:
        cfg, tol = self.cfg, self.tol['comparison']
        rng = self.rng('comparison')
        H = hamiltonian_functional(self.spec)
        psi = first_moment_functional()
        samples = [(float(rng.uniform(cfg.start, cfg.horizon)), m)
                   for m in self.random_measures(rng, self.samples, 3.0)]
        phi = explicit_solution(H, psi, cfg.horizon, self.n_quad)
        report = comparison_check(phi, H, psi, cfg.horizon, samples, self.n_quad, tol=tol, threads=self.threads)
        report.extend(comparison_check(phi.shifted(-0.1), H, psi, cfg.horizon, samples, self.n_quad, tol=tol,
                                       threads=self.threads))

        table, partition = self.table, self.partition
        q1 = partition.n_steps // 2
        t1 = partition.times[q1]
        V = table.as_functional()
        terminal = MeasureFunctional(V.evaluate, V.tier, f'V(t{q1})')
        value_samples = []
        for _ in range(self.samples):
            q = int(rng.integers(0, q1 + 1))
            value_samples.append((partition.times[q], table.measure(q, rng.dirichlet(np.ones(self.lattice.size)))))
        report.extend(comparison_check(V, truncated_hamiltonian(self.spec, self.radius), terminal, t1,
                                       value_samples, partition=partition, tol=tol, threads=self.threads))
        return report

    def check_truncation(self) -> CheckReport:
        rng = self.rng('truncation')
        t, tol = self.cfg.start, self.tol['identity']
        measures = self.random_measures(rng, self.samples, self.grid.half_width)
        report = truncation_check(self.spec, self.radius, measures, t, tol)
        H = hamiltonian_functional(self.spec)
        inside = truncated_hamiltonian(self.spec, self.radius)
        full = truncated_hamiltonian(self.spec, self.grid.half_width)
        for point_id, m in enumerate(self.random_measures(rng, 10, self.radius)):
            report.equality('truncation-inside', t, point_id, inside(t, m), H(t, m), tol)
        for point_id, m in enumerate(measures[:10]):
            report.equality('truncation-full-width', t, point_id, full(t, m), H(t, m), tol)
        return report

    def check_martingale(self) -> CheckReport:
        report = CheckReport('martingale')
        tol = self.tol['identity']
        if self.tree_file:
            tree = read_tree(self.tree_file)
        else:
            tree = tree_from_table(self.table, self.point_id)
        validation = validate_tree(tree, tol=tol)
        for constraint, residual in sorted(validation.worst.items()):
            report.inequality(f'tree:{constraint}', 0.0, tree.root_id, residual, tol, 0.0)
        for violation in validation.violations:
            report.inequality(f'tree:{violation.constraint}', tree.partition.times[tree.nodes[violation.node_id].time_index],
                              violation.node_id, violation.residual, tol, 0.0)
        if not validation.passed:
            logger.error(f'invalid tree: {validation.first}')
            return report

        n_steps = tree.partition.n_steps
        jensen = jensen_check(tree, 0, n_steps // 2, n_steps, tol)
        for row in jensen.itertuples(index=False):
            report.inequality('jensen', tree.partition.times[n_steps // 2], row.node_id, row.lhs, row.rhs, tol)

        flat = constant_tree(tree.partition, tree.prior)
        lam = 0.3
        mixed = expected_cost(mixture_tree(tree, flat, lam), self.spec)
        report.equality('mixture-linearity', tree.partition.start, tree.root_id, mixed,
                        lam * expected_cost(tree, self.spec) + (1.0 - lam) * expected_cost(flat, self.spec), tol)
        if not self.tree_file:
            cost = expected_cost(tree, self.spec)
            report.equality('tree-cost-matches-value', tree.partition.start, self.point_id, cost,
                            self.table.value(0, self.point_id), self.tol['kernel'])
            self.bayes_joint_law(report)
        return report

    def bayes_joint_law(self, report: CheckReport):
        """Sampled (state, atom) pairs against weights[k] * posteriors[k](x), within a few standard errors."""
        plan = self.table.plan(0, self.point_id)
        n = int(self.cfg.check['bayes_samples'])
        width = float(self.tol['bayes_se'])
        t = self.partition.start
        rng = self.rng('martingale')
        prior = plan.barycenter.weights
        states = rng.choice(self.grid.n_points, size=n, p=prior / prior.sum())
        atoms = sample_atoms(plan, states, rng)
        nodes = self.grid.nodes
        for k, (weight, posterior) in enumerate(zip(plan.weights, plan.posteriors)):
            hits = atoms == k
            freq = hits.mean()
            se = np.sqrt(weight * (1.0 - weight) / n)
            report.inequality('bayes-atom-frequency', t, k, abs(freq - weight), width * se, self.tol['identity'])
            if hits.sum() < 2:
                continue
            mean = posterior.mean
            sd = np.sqrt(max(posterior.expect(nodes ** 2) - mean ** 2, 0.0))
            report.inequality('bayes-atom-state-mean', t, k, abs(nodes[states[hits]].mean() - mean),
                              width * sd / np.sqrt(hits.sum()), self.tol['identity'])

    def check_wasserstein(self) -> CheckReport:
        report = CheckReport('wasserstein')
        rng, tol = self.rng('wasserstein'), self.tol['identity']
        for k in range(self.samples):
            m, m2 = self.random_measures(rng, 2, self.grid.half_width / 2)
            report.equality('d1-transport-lp', 0.0, k, wasserstein1(m, m2), wasserstein_lp(m, m2, 1), tol)
            report.equality('d2-transport-lp', 0.0, k, wasserstein2(m, m2), wasserstein_lp(m, m2, 2), tol)
        return report

    def check_heat(self) -> CheckReport:
        report = CheckReport('heat')
        cfg, tol = self.cfg, self.tol
        rng = self.rng('heat')
        t = cfg.start
        # measures stay within a quarter of the box and the kernel within another quarter
        cap = min(cfg.horizon - t, (self.grid.half_width / 16) ** 2)
        low = min(cap, 4 * self.grid.spacing ** 2)
        for k in range(int(self.cfg.check['heat_pairs'])):
            m, m2 = self.random_measures(rng, 2, self.grid.half_width / 4)
            s = t + float(rng.uniform(low, cap))
            evolved, evolved2 = heat_evolve(m, t, s), heat_evolve(m2, t, s)
            report.equality('variance-growth', s, k, second_moment(evolved) - second_moment(m), s - t,
                            tol['generator'])
            before, after = wasserstein1(m, m2), wasserstein1(evolved, evolved2)
            report.inequality('d1-contraction', s, k, after, before, tol['identity'])
            report.inequality('d1-reverse-bound', s, k, before, after + 2.0 * np.sqrt(s - t), tol['generator'])
            mid = 0.5 * (t + s)
            report.inequality('semigroup', s, k, total_variation(heat_evolve(heat_evolve(m, t, mid), mid, s), evolved),
                              0.0, tol['kernel'])
        return report

    def check_matrix_game(self) -> CheckReport:
        report = CheckReport('matrix-game')
        rng, tol = self.rng('matrix-game'), self.tol
        for k in range(int(self.cfg.check['games'])):
            size = 2 + k % 2
            A = rng.uniform(-1.0, 1.0, (size, size))
            report.equality(f'game-value[{size}x{size}]', 0.0, k, matrix_game_value(A).value,
                            support_enumeration_value(A), tol['lp'])
        ratio = lipschitz_probe(self.spec, int(self.cfg.check['lipschitz_pairs']), self.grid, seed=self.seed)
        report.inequality('hamiltonian-lipschitz', 0.0, 0, ratio, self.spec.bound, tol['lipschitz'])
        return report

    def check_value_oracle(self) -> CheckReport:
        report = CheckReport('value-oracle')
        if self.lattice.size != 2:
            logger.info(f'split enumeration needs two support nodes, the lattice has {self.lattice.size}')
            return report
        partition = self.cfg.partition(int(self.cfg.check['oracle_steps']))
        solver = ValueSolver(self.spec, partition, self.lattice, threads=self.threads)
        table = solver.solve()
        stage_costs = [solver.stage_costs(q) for q in range(partition.n_steps)]
        expected = pairwise_value_recursion(self.lattice.points[:, 0], stage_costs)
        for q, t in enumerate(partition.times):
            for k in range(len(self.lattice)):
                report.equality('value-vs-split-enumeration', t, k, table.values[q, k], expected[q, k],
                                self.tol['identity'])
        return report

    def check_sandwich(self) -> CheckReport:
        report = CheckReport('sandwich')
        table, partition, tol = self.table, self.partition, self.tol['identity']
        times = partition.times
        for q in range(partition.n_steps):
            rest = Partition(times[q:])
            for k, coords in enumerate(self.lattice.points):
                baseline = non_revealing_value(self.spec, times[q], table.measure(q, coords), rest)
                report.inequality('value-below-non-revealing', times[q], k, table.values[q, k], baseline, tol)
        for q, t in enumerate(times):
            values = table.values[q]
            for i, mid, j in self.lattice.midpoint_triples():
                report.inequality('midpoint-convexity', t, mid, values[mid], 0.5 * (values[i] + values[j]), tol)
        for k, value in enumerate(table.values[-1]):
            report.equality('terminal-value', times[-1], k, value, 0.0, 0.0)
        return report

    def check_convergence(self) -> CheckReport:
        report = CheckReport('convergence')
        cfg = self.cfg
        study = convergence_study(self.spec, cfg.start, cfg.prior_coords, cfg.convergence_steps, self.lattice,
                                  cfg.horizon, threads=self.threads)
        for row in study.itertuples(index=False):
            report.inequality(f'value-below-non-revealing[N={row.n_steps}]', cfg.start, self.point_id,
                              row.value, row.non_revealing, self.tol['identity'])
        gaps = study['difference'].abs().to_numpy()[1:]
        steps = study['n_steps'].to_numpy()
        for k in range(1, len(gaps)):
            report.update(f'shrinking-gap[N={steps[k + 1]}]', cfg.start, self.point_id, gaps[k], gaps[k - 1],
                          gaps[k - 1] - gaps[k])
        return report

    def check_strategy(self) -> CheckReport:
        report = CheckReport('strategy')
        cfg, tol = self.cfg, self.tol['identity']
        cap = int(cfg.play['enumeration_cap'])
        partition = cfg.partition(int(cfg.check['oracle_steps']))
        table = solve_value(self.spec, partition, self.lattice, threads=self.threads)
        m = table.measure(0, self.lattice.points[self.point_id])
        optimal = make_informed_strategy(table, self.spec, self.point_id)
        upper = upper_guarantee_check(optimal, self.spec, partition, m, cap, tol)
        report.inequality('upper-guarantee[optimal]', cfg.start, self.point_id, upper.worst_reply, upper.guarantee, tol)
        for sigma in (optimal,
                      nonrevealing_strategy(self.lattice, partition, self.spec, self.point_id),
                      full_revealing_strategy(self.lattice, partition, self.spec, self.point_id)):
            lower = liminf_bound_check(sigma, self.spec, partition, m, cap, tol)
            report.update(f'liminf-bound[{sigma.label}]', cfg.start, self.point_id, lower.gamma, lower.bound,
                          lower.slack, tol)
        return report

    def check_reproducibility(self) -> CheckReport:
        report = CheckReport('reproducibility')
        t = self.cfg.start
        first = self.table.values
        again = solve_value(self.spec, self.partition, self.lattice, self.cfg.scheme, self.threads).values
        report.equality('resolve', t, self.point_id, float(np.abs(first - again).max()), 0.0, 0.0)
        other_threads = 1 if self.threads > 1 else 2
        threaded = solve_value(self.spec, self.partition, self.lattice, self.cfg.scheme, other_threads).values
        report.equality(f'resolve[threads={other_threads}]', t, self.point_id,
                        float(np.abs(first - threaded).max()), 0.0, 0.0)
        golden_dir = self.cfg.check['golden_dir']
        if golden_dir:
            stored = self.load_table(golden_dir).values
            report.equality('golden-values', t, self.point_id, float(np.abs(first - stored).max()), 0.0, 0.0)
        return report

    def run(self) -> int:
        suites = SUITES if self.which == 'all' else [self.which]
        run_report = RunReport(self.cfg.config_hash)
        frames = []
        for suite in tqdm(suites, desc='check suites', disable=None, leave=False):
            start = time.perf_counter()
            report = getattr(self, 'check_' + suite.replace('-', '_'))()
            run_report.update(report, time.perf_counter() - start)
            frames.append(report.to_frame())
            logger.info(report.log_dict)
        self.write(pd.concat(frames, ignore_index=True), 'report.csv')
        frame = run_report.to_frame()
        write_frame(frame, self.path('run_report.csv'), self.header + run_report.header())
        if run_report.passed:
            logger.info(f'all {len(suites)} check suites passed')
            return 0
        failed = frame[~frame['passed']]
        for row in failed.itertuples(index=False):
            logger.error(f'suite {row.suite} failed, worst offender {row.worst_check} (slack {row.worst_slack:.3e})')
        return 1
