"""Exception hierarchy shared by all modules."""


class PosednessError(ValueError):
    """Base class for every error raised by this package."""


class InvalidIntervalError(PosednessError):
    pass


class ZeroSizeError(PosednessError):
    pass


class GridMismatchError(PosednessError):
    pass


class IncompatibleGridsError(PosednessError):
    pass


class DimensionError(PosednessError):
    pass


class DomainViolationError(PosednessError):
    pass


class NotInRangeError(PosednessError):
    """Raised when data lies outside the (numerical) range of an operator.

    The offending residual is kept on the ``residual`` attribute.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class SingularBranchError(PosednessError):
    pass


class EmptySetError(PosednessError):
    pass


class SolverBreakdownError(PosednessError):
    def __init__(self, message, condition=float("nan")):
        super().__init__(message)
        self.condition = condition


class NonSquareOperatorError(PosednessError):
    pass


class UnderflowError(PosednessError):
    """Every recorded error fell below the underflow floor.

    The partially filled series is attached as ``series``.
    """

    def __init__(self, message, series=None):
        super().__init__(message)
        self.series = series


class InsufficientPointsError(PosednessError):
    pass


class NoCanonicalSequenceError(PosednessError):
    pass


class ConfigError(PosednessError):
    """Invalid experiment configuration.

    ``key`` and ``line`` locate the problem when known.
    """

    def __init__(self, message, key=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line
