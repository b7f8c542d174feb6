import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from checks.functionals import MeasureFunctional, hamiltonian_functional
from checks.report import CheckReport
from games import hamiltonian_value
from measures import GridMeasure, clamp_pushforward, heat_flow, second_moment, wasserstein1
from payoffs.base import PayoffSpec
from solvers import Partition
from utils.errors import HorizonError, MeasureError
from utils.runner_utils import parallel_map

logger = logging.getLogger(__name__)

TIME_TOL = 1e-12

FlowSample = Tuple[float, GridMeasure, float]


def quadrature_nodes(t: float, t1: float, n_quad: int = 64,
                     partition: Optional[Partition] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(flow times, evaluation positions, weights) of the rule on [t, t1].

    Without a partition the composite midpoint rule with ``n_quad`` cells is
    used; with one, the left rule on the partition times inside (t, t1).
    ``flow times`` starts at t and ends at t1; the integrand is evaluated at
    the entries of ``flow times`` listed in ``evaluation positions``.
    """
    if t1 - t < -TIME_TOL:
        raise HorizonError(f'cannot integrate from {t} to the earlier time {t1}')
    if t1 - t <= TIME_TOL:
        return np.array([t]), np.zeros(0, dtype=int), np.zeros(0)
    if partition is not None:
        times = np.asarray(partition.times)
        inside = times[(times > t + TIME_TOL) & (times < t1 - TIME_TOL)]
        flow_times = np.concatenate([[t], inside, [t1]])
        return flow_times, np.arange(len(flow_times) - 1), np.diff(flow_times)
    if n_quad < 1:
        raise MeasureError(f'n_quad must be >= 1, got {n_quad}')
    width = (t1 - t) / n_quad
    midpoints = t + width * (np.arange(n_quad) + 0.5)
    flow_times = np.concatenate([[t], midpoints, [t1]])
    return flow_times, np.arange(1, n_quad + 1), np.full(n_quad, width)


def flow_integral(F: MeasureFunctional, t: float, m: GridMeasure, t1: float, n_quad: int = 64,
                  partition: Optional[Partition] = None) -> Tuple[float, GridMeasure]:
    """Quadrature of F(s, heat flow of m at s) over [t, t1] and the flow at t1."""
    flow_times, positions, weights = quadrature_nodes(t, t1, n_quad, partition)
    flow = heat_flow(m, flow_times)
    total = sum(w * F(flow_times[k], flow[k]) for k, w in zip(positions, weights))
    return float(total), flow[-1]


def explicit_solution(F: MeasureFunctional, psi: MeasureFunctional, t1: float, n_quad: int = 64,
                      partition: Optional[Partition] = None) -> MeasureFunctional:
    """phi(t, m) = psi(t1, m evolved to t1) + integral over [t, t1] of F along the flow.

    This is the classical solution of the linear equation driven by F with
    terminal condition psi at t1.
    """
    def evaluate(t, m):
        if t > t1 + TIME_TOL:
            raise HorizonError(f'explicit solution is defined up to t1={t1}, got t={t}')
        integral, terminal = flow_integral(F, t, m, t1, n_quad, partition)
        return psi(t1, terminal) + integral

    tier = 'A1' if F.tier == 'A1' and psi.tier == 'A1' else 'unknown'
    return MeasureFunctional(evaluate, tier, f'phi[{F.name};{psi.name}]')


def non_revealing_functional(spec: PayoffSpec, horizon: float, n_quad: int = 64,
                             partition: Optional[Partition] = None) -> MeasureFunctional:
    """U0: the informed player never uses its information."""
    U0 = explicit_solution(hamiltonian_functional(spec), MeasureFunctional(lambda t, m: 0.0, 'A1', '0'),
                           horizon, n_quad, partition)
    return MeasureFunctional(U0.evaluate, 'A1', f'U0[{spec.name}]')


def random_flow_samples(measures: Sequence[GridMeasure], times: Sequence[float],
                        rng: np.random.Generator) -> List[FlowSample]:
    """(t0, m0, s) with t0 < s drawn from ``times``, one per measure."""
    times = np.sort(np.asarray(times, dtype=np.float64))
    samples = []
    for m in measures:
        i, j = np.sort(rng.choice(len(times), size=2, replace=False))
        samples.append((float(times[i]), m, float(times[j])))
    return samples


def subsolution_flow_check(U: MeasureFunctional, spec: PayoffSpec, samples: Sequence[FlowSample],
                           partition: Optional[Partition] = None, n_quad: int = 64, tol: float = 5e-3,
                           threads: int = 1, check_name: str = 'subsolution') -> CheckReport:
    """U(s, m0 evolved to s) - U(t0, m0) + integral of H along the flow >= -tol.

    With a partition, t0 and s are partition times and the integral is the
    left sum on the partition.
    """
    H = hamiltonian_functional(spec)

    def slack(sample):
        t0, m0, s = sample
        if s < t0:
            raise HorizonError(f'sample runs backwards from {t0} to {s}')
        integral, terminal = flow_integral(H, t0, m0, s, n_quad, partition)
        return U(s, terminal) - U(t0, m0) + integral

    report = CheckReport(check_name)
    for point_id, (sample, value) in enumerate(zip(samples, parallel_map(slack, samples, threads))):
        report.update(f'{check_name}[{U.name}]', sample[0], point_id, value, 0.0, value, tol)
    return report


def comparison_check(U: MeasureFunctional, F: MeasureFunctional, psi: MeasureFunctional, t1: float,
                     samples: Sequence[Tuple[float, GridMeasure]], n_quad: int = 64,
                     partition: Optional[Partition] = None, tol: float = 5e-3,
                     threads: int = 1) -> CheckReport:
    """U <= phi on the sampled (t, m), phi the explicit solution for (F, psi, t1).

    The comparison only applies when U(t1, .) <= psi on the sampled measures;
    otherwise the precondition rows fail and the comparison is skipped.
    """
    name = f'comparison[{U.name}]'
    report = CheckReport('comparison')
    for point_id, (_, m) in enumerate(samples):
        report.inequality(f'{name}:terminal', t1, point_id, U(t1, m), psi(t1, m), tol)
    if not report.passed:
        report.skip(name, f'{U.name}(t1, .) exceeds the terminal condition {psi.name}')
        return report
    phi = explicit_solution(F, psi, t1, n_quad, partition)
    values = parallel_map(lambda sample: (U(*sample), phi(*sample)), samples, threads)
    for point_id, ((t, _), (lhs, rhs)) in enumerate(zip(samples, values)):
        report.inequality(name, t, point_id, lhs, rhs, tol)
    return report


def truncated_hamiltonian(spec: PayoffSpec, radius: float) -> MeasureFunctional:
    """H evaluated at the pushforward of m by the clamp onto [-R, R]."""
    if not radius > 0:
        raise MeasureError(f'truncation radius must be positive, got {radius}')

    def evaluate(t, m):
        return hamiltonian_value(spec, t, clamp_pushforward(m, radius)).value

    return MeasureFunctional(evaluate, 'A1', f'H~[{spec.name},R={radius:g}]')


def truncation_check(spec: PayoffSpec, radius: float, measures: Sequence[GridMeasure], t: float = 0.0,
                     tol: float = 1e-9) -> CheckReport:
    """|H - H~| <= C d1(m, clamp m) <= (2C/R) |m|_2^2 on every measure."""
    H, H_tilde = hamiltonian_functional(spec), truncated_hamiltonian(spec, radius)
    report = CheckReport('truncation')
    for point_id, m in enumerate(measures):
        gap = abs(H(t, m) - H_tilde(t, m))
        moved = spec.bound * wasserstein1(m, clamp_pushforward(m, radius))
        report.inequality('truncation-lipschitz', t, point_id, gap, moved, tol)
        report.inequality('truncation-moment', t, point_id, moved,
                          2.0 * spec.bound / radius * second_moment(m), tol)
    return report
