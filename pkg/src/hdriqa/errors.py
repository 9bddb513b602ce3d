"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, so keep the three families distinct:
argument problems, malformed files, and numerical failures.
"""


class HdrIqaError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(HdrIqaError, ValueError):
    """Invalid argument, shape mismatch or unsupported combination."""


class UnsupportedMetricError(ArgumentError):
    pass


class DegenerateInputError(ArgumentError):
    """Input carries no usable signal (all-zero image, zero weights...)."""


class FormatError(HdrIqaError):
    """A file could not be decoded.

    ``offset`` is the byte position where decoding failed, when known.
    """

    def __init__(self, message, offset=None, path=None):
        self.offset = offset
        self.path = path
        parts = []
        if path is not None:
            parts.append(str(path))
        if offset is not None:
            parts.append(f"byte {offset}")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class NumericalError(HdrIqaError, ArithmeticError):
    pass


class UndefinedCorrelationError(NumericalError):
    """Correlation requested on a constant vector."""


class FitError(NumericalError):
    def __init__(self, message, best_residual=float("nan")):
        self.best_residual = best_residual
        super().__init__(f"{message} (best residual {best_residual:g})")
