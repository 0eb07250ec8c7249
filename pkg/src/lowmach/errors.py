"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters or configuration values."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(ValueError):
    """Argument outside the domain of a thermodynamic function."""


class NumericalError(FloatingPointError):
    """A non-finite value appeared in a named field."""

    def __init__(self, message, field=None, snapshot=None):
        super().__init__(message if field is None else f"{message} [{field}]")
        self.field = field
        self.snapshot = snapshot


class InstabilityError(NumericalError):
    """Norm growth during one step exceeded the detector threshold."""


class ConvergenceError(RuntimeError):
    """Iterative solver hit its iteration cap."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)
