"""Exception hierarchy shared across the package."""


class UsCqedError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(UsCqedError, ValueError):
    pass


class ContractError(UsCqedError, ValueError):
    """An input violates a documented precondition (e.g. non-Hermitian)."""


class ResourceError(UsCqedError, MemoryError):
    """A requested Hilbert-space dimension exceeds the configured guard."""


class DomainError(UsCqedError, ValueError):
    """A parameter lies outside the domain where a map is defined."""


class ResonanceError(UsCqedError, ArithmeticError):
    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class ConvergenceError(UsCqedError, RuntimeError):
    pass


class ConfigError(UsCqedError, ValueError):
    """Invalid run configuration; the CLI maps it to exit code 2."""
