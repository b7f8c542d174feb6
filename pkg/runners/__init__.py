from .check_runner import CheckRunner, RunReport
from .dist_runner import DistRunner
from .play_runner import PlayRunner
from .solve_runner import SolveRunner

__all__ = [
    'CheckRunner',
    'DistRunner',
    'PlayRunner',
    'RunReport',
    'SolveRunner',
]
