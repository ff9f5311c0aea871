"""Exception types shared across the package."""


class PrimeLabError(Exception):
    """Base class for all primelab errors."""


class DomainError(PrimeLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeTooLargeError(PrimeLabError, ValueError):
    """A requested range exceeds a configured limit."""


class SizeLimitError(PrimeLabError, ValueError):
    """A computation guard against combinatorial or summation blow-up fired."""


class QuadratureError(PrimeLabError, ArithmeticError):
    """Numerical integration failed to reach the requested accuracy."""


class ConfigError(PrimeLabError, ValueError):
    """Invalid command-line, config-file, or environment configuration."""
