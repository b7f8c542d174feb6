import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['check_name', 't', 'point_id', 'lhs', 'rhs', 'slack', 'passed']


@dataclass(frozen=True)
class CheckRow:
    check_name: str
    t: float
    point_id: int
    lhs: float
    rhs: float
    slack: float
    passed: bool


@dataclass
class CheckReport:
    """Rows of one check suite; a row passes when its slack clears the tolerance."""
    suite: str
    rows: List[CheckRow] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)

    def update(self, check_name: str, t: float, point_id: int, lhs: float, rhs: float,
               slack: float, tol: float = 0.0) -> CheckRow:
        slack = float(slack)
        row = CheckRow(check_name, float(t), int(point_id), float(lhs), float(rhs), slack,
                       bool(np.isfinite(slack) and slack >= -tol))
        self.rows.append(row)
        if not row.passed:
            logger.warning(f'[{self.suite}] {check_name} failed at t={t:g} point {point_id}: '
                           f'lhs={lhs:.6g} rhs={rhs:.6g} slack={slack:.3e}')
        return row

    def inequality(self, check_name: str, t: float, point_id: int, lhs: float, rhs: float,
                   tol: float) -> CheckRow:
        """lhs <= rhs up to tol."""
        return self.update(check_name, t, point_id, lhs, rhs, rhs - lhs, tol)

    def equality(self, check_name: str, t: float, point_id: int, lhs: float, rhs: float,
                 tol: float) -> CheckRow:
        """|lhs - rhs| <= tol; the slack is the unused part of the tolerance."""
        return self.update(check_name, t, point_id, lhs, rhs, tol - abs(lhs - rhs))

    def skip(self, check_name: str, reason: str):
        logger.warning(f'[{self.suite}] {check_name} skipped: {reason}')
        self.skipped.append(f'{check_name}: {reason}')

    def extend(self, other: 'CheckReport'):
        self.rows.extend(other.rows)
        self.skipped.extend(other.skipped)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows) and not self.skipped

    @property
    def worst(self) -> Optional[CheckRow]:
        failed = [row for row in self.rows if not row.passed]
        pool = failed or self.rows
        return min(pool, key=lambda row: row.slack if np.isfinite(row.slack) else -np.inf) if pool else None

    @property
    def log_dict(self) -> dict:
        frame = self.to_frame()
        if frame.empty:
            return {'suite': self.suite, 'checks': 0, 'failed': 0, 'skipped': len(self.skipped)}
        return {
            'suite': self.suite,
            'checks': len(frame),
            'failed': int((~frame['passed']).sum()),
            'skipped': len(self.skipped),
            'worst slack': float(frame['slack'].min()),
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.rows], columns=REPORT_COLUMNS)
