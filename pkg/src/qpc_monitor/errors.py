"""Exception and warning types raised by the simulator."""


class QPCError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(QPCError, ValueError):
    """Invalid physical or numerical parameters."""


class NonFiniteError(ParameterError):
    pass


class NegativeRateError(ParameterError):
    pass


class ZeroCapacityError(ParameterError):
    pass


class DegenerateParamsError(ParameterError):
    pass


class TransmissionOutOfRange(ParameterError):
    pass


class TimeOrderError(ParameterError):
    pass


class UnsupportedInitError(ParameterError):
    pass


class ThresholdAfterZenoError(ParameterError):
    """Pointer threshold time is not earlier than the Zeno time."""


class InsufficientDataError(ParameterError):
    pass


class SchemaError(ParameterError):
    """Configuration does not match the schema.

    ``path`` is the dotted location of the offending field (empty for the
    document root).
    """

    def __init__(self, path, message):
        self.path = path
        self.message = message
        where = path if path else "<root>"
        super().__init__(f"{where}: {message}")


class NumericalError(QPCError, ArithmeticError):
    """A solver could not produce a trustworthy result."""


class StepSizeUnderflow(NumericalError):
    pass


class CapacityExceeded(NumericalError):
    pass


class AliasingRisk(NumericalError):
    pass


class RegimeWarning(UserWarning):
    """An approximation is used outside the regime where it holds."""
