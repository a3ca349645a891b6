"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 for configuration problems, 3 for ingest/data problems and 4 for
numerical failures.
"""


class HedonicError(Exception):
    exit_code = 1


class ConfigError(HedonicError, ValueError):
    exit_code = 2


class DataError(HedonicError, ValueError):
    exit_code = 3


class SchemaError(DataError):
    """Missing or mismatched columns / factor rosters."""


class EmptyInputError(DataError):
    pass


class ConstantColumnError(DataError):
    def __init__(self, factor, message=None):
        self.factor = factor
        super().__init__(message or f"column {factor!r} is constant (zero standard deviation)")


class NumericalError(HedonicError, ArithmeticError):
    exit_code = 4


class DomainError(NumericalError, ValueError):
    """Argument outside the mathematical domain of a function."""


class SingularSystemError(NumericalError):
    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


class RankDeficiencyError(NumericalError):
    def __init__(self, message, columns=()):
        self.columns = tuple(columns)
        super().__init__(message)


class LambdaRangeError(NumericalError, ValueError):
    def __init__(self, message, achievable=None):
        self.achievable = achievable
        super().__init__(message)


class NotPositiveDefiniteError(NumericalError, ValueError):
    def __init__(self, message, minor_index=None):
        self.minor_index = minor_index
        super().__init__(message)
