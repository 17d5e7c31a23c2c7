"""Exception hierarchy.

CLI exit codes key off the two families: ``DataError`` (3) and
``NumericError`` (4).
"""


class ArnnError(Exception):
    pass


class InvalidParameterError(ArnnError, ValueError):
    pass


class InvalidSizeError(InvalidParameterError):
    pass


class DataError(ArnnError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line
        self.path = path


class WindowError(DataError):
    pass


class ConfigError(InvalidParameterError):
    pass


class CheckpointError(DataError):
    pass


class NumericError(ArnnError):
    pass


class ConvergenceError(NumericError):
    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class SingularMatrixError(NumericError):
    def __init__(self, message, rcond):
        super().__init__(f"{message} (reciprocal condition {rcond:.3e})")
        self.rcond = rcond
