import argparse
import hashlib
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from measures import SpatialGrid
from payoffs import PAYOFF_REGISTRY
from solvers import BeliefLattice, Partition
from utils.errors import ConfigError, UnknownSpecError
from utils.runner_utils import resolve_threads

logger = logging.getLogger(__name__)

CONFIG_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'config.yaml')
CHECK_SUITES = ['generator', 'flow', 'subsolution', 'psi-delta', 'comparison', 'truncation', 'martingale',
                'wasserstein', 'heat', 'matrix-game', 'value-oracle', 'sandwich', 'convergence', 'strategy',
                'reproducibility', 'all']
SIGMA_CHOICES = ['optimal', 'nonrevealing', 'fullrevealing', 'file']
TAU_CHOICES = ['bestreply', 'uniform', 'file']
SCHEMES = ['heat', 'voronoi']

# command-line flag -> flat configuration key
FLAG_KEYS = {
    'payoff': 'payoff.name',
    'payoff_table': 'payoff.table',
    'n_steps': 'solve.n_steps',
    'scheme': 'solve.scheme',
    'resolution': 'lattice.resolution',
    'support': 'lattice.support',
    'output_dir': 'output.dir',
    'threads': 'run.threads',
    'sigma': 'play.sigma',
    'tau': 'play.tau',
    'samples': 'play.samples',
    'table_dir': 'play.table_dir',
    'sigma_file': 'play.sigma_file',
    'tau_file': 'play.tau_file',
    'solve_first': 'play.solve_first',
    'which': 'check.which',
    'tree_file': 'check.tree_file',
    'golden_dir': 'check.golden_dir',
}


TRUE_WORDS = ('true', 'yes', 'on', '1')
FALSE_WORDS = ('false', 'no', 'off', '0')
# flags whose value may start with a minus sign
SIGNED_VALUE_FLAGS = ('--support',)


def str2bool(v) -> bool:
    if isinstance(v, bool):
        return v
    word = v.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise argparse.ArgumentTypeError(f'expected one of {TRUE_WORDS + FALSE_WORDS}, got {v!r}')


def float_list(text: str) -> List[float]:
    """``-1,1`` -> [-1.0, 1.0]."""
    try:
        values = [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma-separated numbers, got {text!r}') from None
    if not values:
        raise argparse.ArgumentTypeError('expected at least one number')
    return values


def glue_negative_values(argv: List[str]) -> List[str]:
    """``--support -1,1`` -> ``--support=-1,1``, which argparse would otherwise read as an option."""
    out = []
    args = iter(argv)
    for arg in args:
        value = next(args, None) if arg in SIGNED_VALUE_FLAGS else None
        out.append(arg if value is None else f'{arg}={value}')
    return out


def _coerce(value):
    """YAML 1.1 reads ``1e-9`` as a string; numbers written that way are floats here."""
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [_coerce(v) for v in value]
    return value


def load_defaults(path: str = CONFIG_PATH) -> Dict[str, Any]:
    with open(path) as f:
        nested = yaml.safe_load(f)
    return {f'{section}.{key}': _coerce(value)
            for section, values in nested.items() for key, value in values.items()}


def parse_flat_lines(lines, known: Dict[str, Any], source: str = '<config>') -> Dict[str, Any]:
    """``section.key = value`` lines; ``#`` starts a comment line."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        key, sep, value = line.partition('=')
        key = key.strip()
        if not sep or '.' not in key:
            raise ConfigError(f'{source}:{lineno}: expected `section.key = value`, got {line!r}')
        if key not in known:
            raise ConfigError(f'{source}:{lineno}: unknown key {key!r}')
        try:
            out[key] = _coerce(yaml.safe_load(value.strip()))
        except yaml.YAMLError as e:
            raise ConfigError(f'{source}:{lineno}: cannot parse value of {key!r}: {e}') from e
    return out


def load_flat_config(path: str, known: Dict[str, Any]) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise ConfigError(f'config file {path} does not exist')
    with open(path) as f:
        return parse_flat_lines(f, known, path)


def flat_lines(flat: Dict[str, Any]) -> List[str]:
    """Canonical rendering, one sorted ``section.key = value`` line per entry."""
    return [f'{key} = {yaml.safe_dump(flat[key], default_flow_style=True).strip()}'
            .replace('\n...', '') for key in sorted(flat)]


# keys that change where or how fast a run goes, not what it writes
UNHASHED_KEYS = ('output.dir', 'run.threads')


def config_hash(flat: Dict[str, Any]) -> str:
    hashed = {key: value for key, value in flat.items() if key not in UNHASHED_KEYS}
    return hashlib.sha256('\n'.join(flat_lines(hashed)).encode()).hexdigest()[:12]


@dataclass
class ExperimentConfig:
    """The resolved configuration of one run; every field comes from a flat key."""
    half_width: float
    n_points: int
    start: float
    horizon: float
    payoff: str
    payoff_table: Optional[str]
    n_steps: int
    scheme: str
    convergence_steps: List[int]
    bias_column: bool
    support: List[float]
    resolution: int
    prior: Optional[List[float]]
    cell_radius: float
    projection_tol: float
    extra_points: List[List[float]]
    play: Dict[str, Any]
    check: Dict[str, Any]
    tolerance: Dict[str, float]
    output_dir: Optional[str]
    timezone: str
    threads: int
    flat: Dict[str, Any] = field(default_factory=dict, repr=False)

    @classmethod
    def from_flat(cls, flat: Dict[str, Any]) -> 'ExperimentConfig':
        def section(name):
            return {key.split('.', 1)[1]: value for key, value in flat.items() if key.startswith(name + '.')}

        try:
            return cls(
                half_width=float(flat['grid.half_width']),
                n_points=int(flat['grid.n_points']),
                start=float(flat['horizon.start']),
                horizon=float(flat['horizon.end']),
                payoff=str(flat['payoff.name']),
                payoff_table=flat['payoff.table'],
                n_steps=int(flat['solve.n_steps']),
                scheme=str(flat['solve.scheme']),
                convergence_steps=[int(n) for n in flat['solve.convergence_steps']],
                bias_column=bool(flat['solve.bias_column']),
                support=[float(x) for x in flat['lattice.support']],
                resolution=int(flat['lattice.resolution']),
                prior=None if flat['lattice.prior'] is None else [float(c) for c in flat['lattice.prior']],
                cell_radius=float(flat['lattice.cell_radius']),
                projection_tol=float(flat['lattice.projection_tol']),
                extra_points=[[float(c) for c in p] for p in flat['lattice.extra_points']],
                play=section('play'),
                check=section('check'),
                tolerance={key: float(value) for key, value in section('tolerance').items()},
                output_dir=flat['output.dir'],
                timezone=str(flat['output.timezone']),
                threads=resolve_threads(flat['run.threads']),
                flat=dict(flat),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f'malformed configuration value: {e}') from e

    @property
    def config_hash(self) -> str:
        return config_hash(self.flat)

    @property
    def grid(self):
        return SpatialGrid(half_width=self.half_width, n_points=self.n_points)

    def partition(self, n_steps: Optional[int] = None):
        return Partition.uniform(self.start, self.horizon, self.n_steps if n_steps is None else n_steps)

    def lattice(self):
        extra = list(self.extra_points)
        if self.prior is not None:
            extra.append(self.prior)
        return BeliefLattice(self.grid, self.support, self.resolution, extra,
                             cell_radius=self.cell_radius, projection_tol=self.projection_tol)

    @property
    def prior_coords(self) -> np.ndarray:
        if self.prior is None:
            return np.full(len(self.support), 1.0 / len(self.support))
        return np.asarray(self.prior, dtype=np.float64)


def merge_args(args: argparse.Namespace, defaults: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """defaults <- config file <- command-line flags."""
    flat = dict(load_defaults() if defaults is None else defaults)
    if getattr(args, 'config', None):
        flat.update(load_flat_config(args.config, flat))
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            flat[key] = value
    if getattr(args, 'seed', None) is not None and getattr(args, 'command', None) in ('play', 'check'):
        flat[f'{args.command}.seed'] = args.seed
    return flat


def config_constraint(cfg: ExperimentConfig):
    if cfg.n_points < 3 or cfg.n_points % 2 == 0:
        raise ConfigError(f'grid.n_points must be odd and >= 3, got {cfg.n_points}')
    if not cfg.half_width > 0:
        raise ConfigError(f'grid.half_width must be positive, got {cfg.half_width}')
    if not cfg.start < cfg.horizon:
        raise ConfigError(f'horizon.start={cfg.start} must be smaller than horizon.end={cfg.horizon}')
    if cfg.n_steps < 2:
        raise ConfigError(f'solve.n_steps must be >= 2, got {cfg.n_steps}')
    if any(n < 1 for n in cfg.convergence_steps):
        raise ConfigError(f'solve.convergence_steps must be positive, got {cfg.convergence_steps}')
    if cfg.scheme not in SCHEMES:
        raise ConfigError(f'solve.scheme must be one of {SCHEMES}, got {cfg.scheme!r}')
    if cfg.resolution < 1:
        raise ConfigError(f'lattice.resolution must be >= 1, got {cfg.resolution}')
    spacing = 2.0 * cfg.half_width / (cfg.n_points - 1)
    for x in cfg.support:
        if abs(x) > cfg.half_width or abs((x + cfg.half_width) / spacing - round((x + cfg.half_width) / spacing)) > 1e-9:
            raise ConfigError(f'support node {x} is not a grid node')
    if cfg.prior is not None:
        prior = np.asarray(cfg.prior)
        if prior.shape != (len(cfg.support),) or prior.min() < 0 or abs(prior.sum() - 1.0) > 1e-9:
            raise ConfigError(f'lattice.prior must be a probability vector over the support, got {cfg.prior}')
    for key, value in cfg.tolerance.items():
        if not value > 0:
            raise ConfigError(f'tolerance.{key} must be positive, got {value}')
    if cfg.payoff not in PAYOFF_REGISTRY:
        raise UnknownSpecError(f'unknown payoff spec {cfg.payoff!r}; available: {sorted(PAYOFF_REGISTRY)}')
    if cfg.play['sigma'] not in SIGMA_CHOICES:
        raise ConfigError(f'play.sigma must be one of {SIGMA_CHOICES}')
    if cfg.play['tau'] not in TAU_CHOICES:
        raise ConfigError(f'play.tau must be one of {TAU_CHOICES}')
    if int(cfg.play['samples']) < 0:
        raise ConfigError('play.samples must be >= 0')
    if cfg.check['which'] not in CHECK_SUITES:
        raise ConfigError(f'check.which must be one of {CHECK_SUITES}')


def arg_constraint(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_flat(merge_args(args))
    config_constraint(cfg)
    return cfg
