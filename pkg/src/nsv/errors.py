"""Exception types shared across the package."""


class InvalidFieldError(ValueError):
    """Raised when coefficient data violates a field invariant."""


class DomainMismatchError(ValueError):
    """Raised when two fields do not share the same discretization."""


class CapacityError(ValueError):
    """Raised when a request exceeds what the truncation can provide."""


class UnsupportedAlphaError(ValueError):
    """Raised when a Voigt-only operation is called with alpha = 0."""


class DivergenceError(RuntimeError):
    """Raised when a trajectory blows up; carries the failure time."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class ConfigError(ValueError):
    """Raised on malformed or inconsistent run configuration."""
