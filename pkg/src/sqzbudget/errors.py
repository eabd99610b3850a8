"""Exception hierarchy.

Everything raised on purpose derives from :class:`SqueezingError`. The CLI
maps :class:`ConfigError` to exit code 1 and every other subclass to 2.
"""

from __future__ import annotations


class SqueezingError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(SqueezingError, ValueError):
    """Argument is malformed or non-finite."""


class DomainError(SqueezingError, ValueError):
    """Argument lies outside the mathematical domain of the operation."""


class AboveThresholdError(DomainError):
    """Pump power (or normalized pump power) at or above oscillation threshold."""


class NonPhysicalMeasurementError(DomainError):
    """Measured level at or below the detector circuit-noise floor."""


class SingularInversionError(DomainError):
    """Phase-mixing matrix is singular (45 degree jitter)."""


class InconsistentInputsError(DomainError):
    """Inputs cannot have come from the forward model."""


class NoSqueezingError(InconsistentInputsError):
    """Squeezed quadrature is not below shot noise."""


class InvalidModelError(DomainError):
    """Model parameters violate their physical bounds."""


class UnderdeterminedError(DomainError):
    """Not enough independent data to identify the fitted parameters."""


class FitFailureError(SqueezingError):
    """Iterative fit did not converge.

    ``last_iterate`` holds the parameter value at the point of giving up.
    """

    def __init__(self, message: str, last_iterate: float):
        super().__init__(message)
        self.last_iterate = last_iterate


class UnstableEstimateError(SqueezingError):
    """Too many resampled pipeline evaluations failed."""


class ConfigError(SqueezingError, ValueError):
    """Configuration or table text could not be parsed or validated.

    ``key`` names the offending field and ``line`` the 1-based line number,
    when known.
    """

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None):
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)
        self.key = key
        self.line = line
