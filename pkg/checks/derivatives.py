import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from checks.functionals import MeasureFunctional
from measures import GridMeasure, heat_evolve
from utils.errors import HorizonError, MeasureError
from utils.runner_utils import parallel_map

logger = logging.getLogger(__name__)

FLAT_STEP = 1e-4
EXACT_TOL = 1e-12


def flat_derivative(U: MeasureFunctional, t: float, m: GridMeasure, r: float = FLAT_STEP,
                    indices: Optional[Sequence[int]] = None, threads: int = 1) -> np.ndarray:
    """Recentred flat derivative dU/dm(t, m, x_i) by one-sided differences.

    Only the nodes in ``indices`` (all nodes by default, always extended by the
    support of m) are evaluated; the other entries are NaN.
    """
    if not 0.0 < r < 1.0:
        raise MeasureError(f'flat derivative step must lie in (0, 1), got {r}')
    grid = m.grid
    if indices is None:
        indices = np.arange(grid.n_points)
    indices = np.union1d(np.asarray(indices, dtype=int), m.support)
    base = U(t, m)

    def quotient(i):
        bumped = (1.0 - r) * m.weights
        bumped[i] += r
        return (U(t, GridMeasure.normalized(grid, bumped)) - base) / r

    out = np.full(grid.n_points, np.nan)
    out[indices] = parallel_map(quotient, indices, threads)
    support = m.support
    return out - float(m.weights[support] @ out[support])


def support_window(m: GridMeasure, pad: int = 2) -> np.ndarray:
    """Nodes within ``pad`` of the support of m."""
    support = m.support
    window = (support[:, None] + np.arange(-pad, pad + 1)[None, :]).ravel()
    return np.unique(np.clip(window, 0, m.grid.n_points - 1))


def intrinsic_derivative(flat: np.ndarray, spacing: float, at: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Central differences of the flat derivative: (D_m U, div D_m U) at the nodes ``at``."""
    n = len(flat)
    if at.min() < 1 or at.max() > n - 2:
        raise MeasureError('the support touches the grid boundary; no central difference there')
    left, mid, right = flat[at - 1], flat[at], flat[at + 1]
    if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
        raise MeasureError('flat derivative missing next to the support')
    return (right - left) / (2.0 * spacing), (right - 2.0 * mid + left) / spacing ** 2


@dataclass(frozen=True)
class GeneratorValue:
    value: float
    time_derivative: float
    half_trace: float
    one_sided: bool


@dataclass(frozen=True)
class DerivativeReport:
    """Derivatives of U at (t, m) and the flow difference quotients.

    ``flat``, ``intrinsic`` and ``divergence`` are sampled at ``nodes`` (the
    support of m); ``normalization`` is the integral of the flat derivative
    against m, zero by construction.
    """
    t: float
    nodes: np.ndarray
    flat: np.ndarray
    intrinsic: np.ndarray
    divergence: np.ndarray
    normalization: float
    generator: float
    one_sided: bool
    quotients: Tuple[float, float, float]
    order: float
    extrapolated: float

    @property
    def residual(self) -> float:
        return self.extrapolated - self.generator

    @property
    def exact(self) -> bool:
        """All three quotients agree, so no order can be read off."""
        q1, q2, q3 = self.quotients
        return abs(q1 - q2) < EXACT_TOL and abs(q2 - q3) < EXACT_TOL


def _time_derivative(U: MeasureFunctional, t: float, m: GridMeasure, dt: float,
                     start: float, horizon: float) -> Tuple[float, bool]:
    if t < start or t > horizon:
        raise HorizonError(f't={t} outside [{start}, {horizon}]')
    if t - dt >= start and t + dt <= horizon:
        return (U(t + dt, m) - U(t - dt, m)) / (2.0 * dt), False
    if t + dt <= horizon:
        return (U(t + dt, m) - U(t, m)) / dt, True
    return (U(t, m) - U(t - dt, m)) / dt, True


def _spatial_terms(U, t, m, r, threads):
    at = m.support
    flat = flat_derivative(U, t, m, r, indices=support_window(m, 1), threads=threads)
    intrinsic, divergence = intrinsic_derivative(flat, m.grid.spacing, at)
    return at, flat, intrinsic, divergence


def generator(U: MeasureFunctional, t: float, m: GridMeasure, r: float = FLAT_STEP, dt: float = 1e-3,
              start: float = 0.0, horizon: float = 1.0, threads: int = 1) -> GeneratorValue:
    """dU/dt + 1/2 integral of div[D_m U] dm by finite differences.

    Near the ends of [start, horizon] the time difference is one-sided and the
    result is flagged.
    """
    dudt, one_sided = _time_derivative(U, t, m, dt, start, horizon)
    at, _, _, divergence = _spatial_terms(U, t, m, r, threads)
    half_trace = 0.5 * float(m.weights[at] @ divergence)
    if one_sided:
        logger.debug(f'one-sided time difference for {U.name} at t={t}')
    return GeneratorValue(dudt + half_trace, dudt, half_trace, one_sided)


def flow_quotient(U: MeasureFunctional, t: float, m: GridMeasure, dt: float) -> float:
    """[U(t + dt, m evolved to t + dt) - U(t, m)] / dt."""
    return (U(t + dt, heat_evolve(m, t, t + dt)) - U(t, m)) / dt


def flow_derivative_check(U: MeasureFunctional, t: float, m: GridMeasure, dt: float = 0.05,
                          r: float = FLAT_STEP, generator_dt: float = 1e-3, start: float = 0.0,
                          horizon: float = 1.0, threads: int = 1) -> DerivativeReport:
    """Flow quotients at dt, dt/2, dt/4 against the generator.

    The observed order is log2 of the ratio of successive quotient gaps and the
    extrapolated quotient is 2 Q(dt/2) - Q(dt).
    """
    if not dt > 0 or t + dt > horizon + 1e-12:
        raise HorizonError(f'flow step {dt} from t={t} leaves the horizon {horizon}')
    quotients = tuple(flow_quotient(U, t, m, dt / 2 ** k) for k in range(3))
    q1, q2, q3 = quotients
    gap1, gap2 = abs(q1 - q2), abs(q2 - q3)
    if gap2 < EXACT_TOL:
        order = np.inf
    else:
        order = float(np.log2(gap1 / gap2)) if gap1 > 0 else -np.inf
    dudt, one_sided = _time_derivative(U, t, m, generator_dt, start, horizon)
    at, flat, intrinsic, divergence = _spatial_terms(U, t, m, r, threads)
    value = dudt + 0.5 * float(m.weights[at] @ divergence)
    normalization = float(m.weights[at] @ flat[at])
    report = DerivativeReport(t, at, flat[at], intrinsic, divergence, normalization, value, one_sided,
                              quotients, order, 2.0 * q2 - q1)
    logger.debug(f'{U.name} at t={t}: quotients={quotients} generator={value:.6g} order={order:.3g}')
    return report
