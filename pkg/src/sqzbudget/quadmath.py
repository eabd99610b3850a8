"""Noise-power algebra on shot-normalized variances.

All arithmetic happens on linear variances where 1.0 is the shot-noise
level. Decibels appear only at the edges (:func:`db_to_linear`,
:func:`linear_to_db`, :meth:`NoiseLevel.from_db`, :attr:`NoiseLevel.db`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InvalidArgumentError, NonPhysicalMeasurementError

_DB_PER_NEPER = 10.0 / math.log(10.0)


def db_to_linear(level_db: float) -> float:
    """Convert a power level in dB to a linear ratio, ``10**(dB/10)``.

    >>> db_to_linear(0.0)
    1.0
    """
    level_db = float(level_db)
    if not math.isfinite(level_db):
        raise InvalidArgumentError(f"level in dB must be finite, got {level_db!r}")
    return 10.0 ** (level_db / 10.0)


def linear_to_db(ratio: float) -> float:
    """Convert a linear power ratio to dB, ``10*log10(ratio)``.

    >>> linear_to_db(1.0)
    0.0
    """
    ratio = float(ratio)
    if not ratio > 0.0 or math.isinf(ratio):
        raise DomainError(f"power ratio must be positive and finite, got {ratio!r}")
    return 10.0 * math.log10(ratio)


@dataclass(frozen=True)
class NoiseLevel:
    """Shot-normalized quadrature variance with an optional 1-sigma error.

    Parameters
    ----------
    value : float
        Linear variance, 1.0 being shot noise.
    sigma : float or None
        Absolute 1-sigma uncertainty on ``value``.
    """

    value: float
    sigma: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0.0):
            raise InvalidArgumentError(f"noise level must be positive and finite, got {self.value!r}")
        if self.sigma is not None and not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise InvalidArgumentError(f"sigma must be non-negative and finite, got {self.sigma!r}")

    @classmethod
    def from_db(cls, level_db: float, sigma_db: float | None = None) -> NoiseLevel:
        """Build from a dB reading; ``sigma_db`` is linearized around the level."""
        value = db_to_linear(level_db)
        sigma = None if sigma_db is None else value * float(sigma_db) / _DB_PER_NEPER
        return cls(value, sigma)

    @property
    def db(self) -> float:
        return linear_to_db(self.value)

    @property
    def sigma_db(self) -> float | None:
        if self.sigma is None:
            return None
        return _DB_PER_NEPER * self.sigma / self.value


@dataclass(frozen=True)
class CircuitNoiseFloor:
    """Detector dark-noise power relative to shot noise.

    ``level_db = -inf`` is accepted and means a noiseless detector.
    """

    level_db: float

    def __post_init__(self):
        if math.isnan(self.level_db) or not self.level_db < 0.0:
            raise InvalidArgumentError(
                f"circuit noise floor must lie below shot noise (< 0 dB), got {self.level_db!r}"
            )

    @property
    def linear(self) -> float:
        if math.isinf(self.level_db):
            return 0.0
        return db_to_linear(self.level_db)


NO_FLOOR = CircuitNoiseFloor(-math.inf)


def subtract_circuit_noise(observed: NoiseLevel, floor: CircuitNoiseFloor) -> NoiseLevel:
    """Remove the detector floor from a reading normalized to a floored shot-noise trace.

    Both the signal trace and the shot-noise reference contain the floor
    ``n_c``, so the true level is ``(v - n_c) / (1 - n_c)``.

    Raises
    ------
    NonPhysicalMeasurementError
        If the reading is at or below the floor.
    """
    n_c = floor.linear
    if not observed.value > n_c:
        raise NonPhysicalMeasurementError(
            f"observed level {linear_to_db(observed.value):.3f} dB is not above "
            f"the circuit noise floor {floor.level_db:.3f} dB"
        )
    scale = 1.0 - n_c
    sigma = None if observed.sigma is None else observed.sigma / scale
    return NoiseLevel((observed.value - n_c) / scale, sigma)


def add_circuit_noise(true_level: NoiseLevel, floor: CircuitNoiseFloor) -> NoiseLevel:
    """Forward counterpart of :func:`subtract_circuit_noise`."""
    n_c = floor.linear
    scale = 1.0 - n_c
    sigma = None if true_level.sigma is None else true_level.sigma * scale
    return NoiseLevel(true_level.value * scale + n_c, sigma)
