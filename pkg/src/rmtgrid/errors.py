"""Exception hierarchy shared by every rmtgrid module."""


class RmtGridError(Exception):
    """Base class for all library errors."""


class ValidationError(RmtGridError, ValueError):
    """Invalid argument, configuration or input data."""


class RangeError(ValidationError):
    """Window bounds outside the available history."""


class DegenerateRowError(ValidationError):
    """A row with (numerically) zero variance cannot be standardized."""

    def __init__(self, message, bus_id=None, end_time=None):
        super().__init__(message)
        self.bus_id = bus_id
        self.end_time = end_time


class DegenerateSampleError(ValidationError):
    """A sample without spread (e.g. constant) handed to a moment test."""


class NumericError(RmtGridError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class SingularSpectrumError(NumericError):
    """Eigenvalue at (or below) zero fed to a logarithmic test function."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UnsupportedParameterError(ValidationError):
    """Parameter combination outside the domain of a theoretical formula."""


class CaseFormatError(ValidationError):
    """Malformed case, scenario or trace file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ScenarioError(RmtGridError):
    """The scripted scenario cannot be simulated."""
