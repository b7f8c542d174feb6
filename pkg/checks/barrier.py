import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from checks.derivatives import flat_derivative, support_window
from checks.functionals import MeasureFunctional
from checks.report import CheckReport
from measures import GridMeasure, heat_kernel, moment_p, smoothed_density, wasserstein1
from utils.errors import GridMismatchError, MeasureError

logger = logging.getLogger(__name__)

SEPARATION_MARGIN = 1.05


def _integrand(m: GridMeasure, m1: GridMeasure, delta: float):
    if not delta > 0:
        raise MeasureError(f'delta must be positive, got {delta}')
    if m.grid != m1.grid:
        raise GridMismatchError(f'measures live on different grids: {m.grid} vs {m1.grid}')
    x = m.grid.nodes
    gap = smoothed_density(m, delta) - smoothed_density(m1, delta)
    floor = np.sqrt(delta * np.exp(-x ** 2))
    root = np.sqrt(floor ** 2 + x ** 2 * gap ** 2)
    return x, gap, root, floor


def psi_delta(m: GridMeasure, m1: GridMeasure, delta: float) -> float:
    """Barrier around m1: integral of sqrt(delta e^{-x^2} + x^2 (rho*m - rho*m1)^2) minus its value at m1.

    Grid weights divided by the spacing are read as density samples.  The value
    at m1 is the grid sum of sqrt(delta e^{-x^2}), sqrt(2 pi delta) on a wide grid.
    """
    _, _, root, floor = _integrand(m, m1, delta)
    return float(m.grid.spacing * (root - floor).sum())


def psi_delta_flat_derivative(m: GridMeasure, m1: GridMeasure, delta: float) -> np.ndarray:
    """Closed-form recentred flat derivative of psi_delta at m on every node."""
    x, gap, root, _ = _integrand(m, m1, delta)
    kernel = heat_kernel(m.grid, delta).matrix
    flat = kernel @ (x ** 2 * gap / root)
    return flat - float(m.weights @ flat)


def psi_delta_upper_bound(m: GridMeasure, m1: GridMeasure, delta: float) -> float:
    """|m|_1 + |m1|_1 + 2 sqrt(delta)."""
    return moment_p(m, 1) + moment_p(m1, 1) + 2.0 * np.sqrt(delta)


@dataclass(frozen=True)
class SeparationResult:
    """min of psi_delta over candidates at d1-distance at least nu from m1."""
    nu: float
    alpha: float
    n_candidates: int
    n_used: int

    @property
    def passed(self) -> bool:
        return self.n_used > 0 and self.alpha > 0


def separation_radius(delta: float, margin: float = SEPARATION_MARGIN) -> float:
    return margin * (np.sqrt(2.0 * np.pi) + 2.0) * np.sqrt(delta)


def psi_delta_separation(m1: GridMeasure, delta: float, candidates: Sequence[GridMeasure],
                         margin: float = SEPARATION_MARGIN) -> SeparationResult:
    nu = separation_radius(delta, margin)
    far = [m for m in candidates if wasserstein1(m, m1) >= nu]
    alpha = min((psi_delta(m, m1, delta) for m in far), default=np.nan)
    if not far:
        logger.warning(f'no candidate lies at d1 >= {nu:.4g} from the anchor measure')
    return SeparationResult(float(nu), float(alpha), len(candidates), len(far))


def barrier_check(m1: GridMeasure, delta: float, measures: Sequence[GridMeasure], tol: float = 1e-6,
                  derivative_step: float = 1e-7, derivative_tol: float = 1e-3) -> CheckReport:
    """Vanishing at m1, nonnegativity, moment bound, separation and flat derivative of psi_delta."""
    report = CheckReport('psi-delta')
    report.equality('psi-zero', 0.0, 0, psi_delta(m1, m1, delta), 0.0, tol)
    for point_id, m in enumerate(measures):
        value = psi_delta(m, m1, delta)
        report.inequality('psi-nonnegative', 0.0, point_id, 0.0, value, tol)
        report.inequality('psi-upper-bound', 0.0, point_id, value, psi_delta_upper_bound(m, m1, delta), tol)

    separation = psi_delta_separation(m1, delta, measures)
    report.update('psi-separation', 0.0, separation.n_used, separation.nu,
                  separation.alpha, separation.alpha if separation.passed else -np.inf)

    if measures:
        m = measures[0]
        psi = MeasureFunctional(lambda t, mm: psi_delta(mm, m1, delta), 'A2', 'psi_delta')
        window = support_window(m)
        numeric = flat_derivative(psi, 0.0, m, derivative_step, indices=window)[window]
        closed = psi_delta_flat_derivative(m, m1, delta)[window]
        for node, lhs, rhs in zip(window, numeric, closed):
            report.equality('psi-flat-derivative', 0.0, int(node), lhs, rhs, derivative_tol)
    return report
