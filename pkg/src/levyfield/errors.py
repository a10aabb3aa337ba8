"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes: ConfigError -> 2,
NumericError -> 3, FingerprintMismatchError -> 4.
"""


class LevyFieldError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(LevyFieldError):
    """Invalid configuration or invalid arguments to an operation."""


class IntegrabilityError(LevyFieldError):
    """A jump measure violates the (1 ^ x^2) integrability requirement."""

    def __init__(self, message, diverging_sum=None):
        super().__init__(message)
        self.diverging_sum = diverging_sum


class NumericError(LevyFieldError):
    """A numerical procedure failed beyond its tolerance policy."""


class FingerprintMismatchError(LevyFieldError):
    """Artifacts built from different characteristic triples were combined."""
