"""Exception hierarchy. Each family maps onto one CLI exit code."""


class TsmbError(Exception):
    exit_code = 1


class ConfigError(TsmbError, ValueError):
    exit_code = 2


class DataError(TsmbError, ValueError):
    exit_code = 3


class AlignmentError(DataError):
    """A delay pushes a shifted feature window past the end of its series."""

    def __init__(self, message, series=None, member=None):
        super().__init__(message)
        self.series = series
        self.member = member


class NumericalError(TsmbError, ArithmeticError):
    exit_code = 4


class OptimizationError(NumericalError):
    """The objective raised or returned a non-finite value at ``point``."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DegenerateScoreWarning(UserWarning):
    pass
