import logging
import os
from functools import cached_property
from typing import Optional

import numpy as np
import pandas as pd

from payoffs import build_payoff
from solvers import ValueTable, solve_value
from utils.arg_utils import ExperimentConfig
from utils.errors import ConfigError, ProjectionError
from utils.file_utils import output_header, read_frame, write_frame, write_frames

logger = logging.getLogger(__name__)

TABLE_FILES = ('value.csv', 'plans.csv', 'lattice.csv')


class BaseRunner(object):
    def __init__(self, cfg: ExperimentConfig, output_dir: str):
        self.cfg = cfg
        self.output_dir = output_dir
        self.threads = cfg.threads
        self.header = output_header(cfg.config_hash)
        self.timings = {}

    @cached_property
    def spec(self):
        return build_payoff(self.cfg)

    @cached_property
    def grid(self):
        return self.cfg.grid

    @cached_property
    def partition(self):
        return self.cfg.partition()

    @cached_property
    def lattice(self):
        return self.cfg.lattice()

    @cached_property
    def point_id(self) -> int:
        point_id = self.lattice.find(self.cfg.prior_coords)
        if point_id is None:
            raise ProjectionError(f'prior {self.cfg.prior_coords} is not a lattice point')
        return point_id

    def solve(self) -> ValueTable:
        return solve_value(self.spec, self.partition, self.lattice, self.cfg.scheme, self.threads)

    def load_table(self, table_dir: str) -> ValueTable:
        missing = [f for f in TABLE_FILES if not os.path.exists(os.path.join(table_dir, f))]
        if missing:
            raise ConfigError(f'{table_dir} lacks {missing}; run `solve` first or pass --solve-first')
        stored = read_frame(os.path.join(table_dir, 'lattice.csv'))
        coords = stored.drop(columns='point_id').to_numpy(np.float64)
        if coords.shape != self.lattice.points.shape or np.abs(coords - self.lattice.points).max() > 1e-12:
            raise ConfigError(f'the lattice stored in {table_dir} differs from the configured one')
        return ValueTable.from_frames(self.partition, self.lattice,
                                      read_frame(os.path.join(table_dir, 'value.csv')),
                                      read_frame(os.path.join(table_dir, 'plans.csv')),
                                      self.cfg.scheme, self.spec.name)

    def path(self, file_name: str) -> str:
        return os.path.join(self.output_dir, file_name)

    def write(self, frame: pd.DataFrame, file_name: str):
        write_frame(frame, self.path(file_name), self.header)
        logger.info(f'wrote {self.path(file_name)}')

    def write_table(self, table: ValueTable, extra: Optional[dict] = None):
        value, plans, lattice = table.to_frames()
        if extra:
            for column, values in extra.items():
                value[column] = values
        write_frames(dict(zip(TABLE_FILES, (value, plans, lattice))), self.output_dir, self.header)

    def run(self) -> int:
        raise NotImplementedError
