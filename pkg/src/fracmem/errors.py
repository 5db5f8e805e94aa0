"""Exception types shared across the package."""


class FracmemError(Exception):
    """Base class for all package errors."""

    kind = "error"


class DomainError(FracmemError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    kind = "domain"


class InfeasibleError(FracmemError, ValueError):
    """A switching task cannot be met with the requested pulse parameters."""

    kind = "infeasible"


class ConfigError(FracmemError, ValueError):
    """A run configuration failed to parse or validate."""

    kind = "config"

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line
