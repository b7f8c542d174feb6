class WinfoError(Exception):
    """Base class of every error raised by the library.

    ``code`` is the machine-readable token printed by ``main.py``.
    """
    code = 'winfo-error'


class ConfigError(WinfoError, ValueError):
    code = 'invalid-config'


class UnknownSpecError(WinfoError, KeyError):
    code = 'unknown-spec'

    def __str__(self):
        return str(self.args[0]) if self.args else self.code


class GridMismatchError(WinfoError, ValueError):
    code = 'grid-mismatch'


class MeasureError(WinfoError, ValueError):
    code = 'invalid-measure'


class HorizonError(WinfoError, ValueError):
    code = 'time-out-of-horizon'


class GameShapeError(WinfoError, ValueError):
    code = 'invalid-matrix'


class Unbounded(WinfoError, OverflowError):
    code = 'lp-unbounded'


class Infeasible(WinfoError, ArithmeticError):
    code = 'lp-infeasible'


class ProjectionError(WinfoError, ValueError):
    code = 'projection-failure'


class InvalidTreeError(WinfoError, ValueError):
    code = 'invalid-tree'


class ZeroProbabilityError(WinfoError, ValueError):
    code = 'zero-probability'


class EnumerationBudgetError(WinfoError, RuntimeError):
    code = 'enumeration-budget'


# exit status of main.py per error family
USAGE_ERRORS = (ConfigError, UnknownSpecError)
