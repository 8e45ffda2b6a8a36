"""Exception hierarchy. Each class carries the CLI error category it maps to."""


class HusimiTomoError(Exception):
    category = "numeric"


class ConfigError(HusimiTomoError, ValueError):
    category = "config"


class TruncationError(HusimiTomoError, ValueError):
    """Raised when a Fock cutoff is too small for the requested amplitude."""

    category = "truncation"


class NumericError(HusimiTomoError, ArithmeticError):
    category = "numeric"
