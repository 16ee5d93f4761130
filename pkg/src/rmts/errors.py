"""Exception hierarchy shared by every rmts module."""


class RmtsError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(RmtsError, ValueError):
    """Operand dimensions are incompatible."""


class SingularMatrixError(RmtsError, ArithmeticError):
    """A pivot fell below the singularity threshold.

    Attributes:
        step: Optional time index at which the singular matrix arose.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NumericalError(RmtsError, ArithmeticError):
    """An iterative method failed or produced a non-finite value.

    Attributes:
        estimate: Best partial result available when the method gave up.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DivergenceError(NumericalError):
    """A recursion or trajectory is not convergent / blew up.

    Attributes:
        timestamp: Time index of the first non-finite value, if known.
    """

    def __init__(self, message, timestamp=None, estimate=None):
        super().__init__(message, estimate=estimate)
        self.timestamp = timestamp


class DegenerateLikelihoodError(NumericalError):
    """A conditional variance is zero so the Gaussian density is undefined."""


class InitializationError(RmtsError, ValueError):
    """An optimizer or fit cannot start from the supplied point."""


class InsufficientDataError(RmtsError, ValueError):
    """Too few observations for the requested statistic."""


class UnsupportedEnsembleError(RmtsError, ValueError):
    """The requested recursion does not apply to this matrix constraint."""


class ConfigError(RmtsError, ValueError):
    """An experiment configuration failed validation."""


class SeriesParseError(RmtsError, ValueError):
    """A series file is malformed.

    Attributes:
        line: 1-based line number of the offending row, if known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
