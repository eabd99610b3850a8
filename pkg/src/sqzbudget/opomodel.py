"""Forward model of a subthreshold OPO seen through a homodyne detector.

Chain of evaluation for a normalized pump power ``x = sqrt(P/P_th)``:

1. intracavity loss ``L(x)`` (fixed, or a line in x)
2. escape efficiency ``rho = T/(T+L)`` and total efficiency ``E = eta*xi**2*zeta*rho``
3. generated variances ``R_pm = 1 +- E*4x/((1 -+ x)**2 + 4*Omega**2)``
4. phase-jitter mixing with rms ``theta``
5. detector circuit-noise floor
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import AboveThresholdError, DomainError, InvalidArgumentError, InvalidModelError
from .quadmath import NO_FLOOR, CircuitNoiseFloor, NoiseLevel, add_circuit_noise

C_LIGHT = 299792458.0  # m/s


class FrequencyConvention(str, Enum):
    """How the measurement frequency enters ``Omega = f/gamma``.

    ``ANGULAR`` multiplies ``f`` by ``2*pi`` before dividing by the cavity
    decay rate; ``CYCLIC`` uses ``f`` as is.
    """

    ANGULAR = "angular"
    CYCLIC = "cyclic"


@dataclass(frozen=True)
class LossLine:
    """Pump-dependent intracavity loss ``L(x) = intercept + slope * x``."""

    intercept: float
    slope: float

    def __post_init__(self):
        for name in ("intercept", "slope"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidModelError(f"loss line {name} must be finite")
        if self.intercept < 0.0:
            raise InvalidModelError(f"loss line intercept must be >= 0, got {self.intercept!r}")
        end = self.intercept + self.slope
        if not (0.0 <= end < 1.0) or not self.intercept < 1.0:
            raise InvalidModelError("loss line must stay within [0, 1) for x in [0, 1]")

    def __call__(self, x: float) -> float:
        return intracavity_loss(self, x)


def intracavity_loss(line: LossLine, x: float) -> float:
    """Evaluate the loss line at normalized pump power ``x``."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"normalized pump power must lie in [0, 1], got {x!r}")
    loss = line.intercept + line.slope * x
    if not 0.0 <= loss < 1.0:
        raise InvalidModelError(f"loss {loss!r} at x={x!r} outside [0, 1)")
    return loss


@dataclass(frozen=True)
class OpoParams:
    """Cavity parameters.

    ``loss`` is either a fixed fraction or a :class:`LossLine`.
    ``threshold`` is the oscillation threshold in watts, if known.
    """

    transmittance: float
    round_trip_length: float
    loss: float | LossLine
    threshold: float | None = None

    def __post_init__(self):
        if not 0.0 < self.transmittance < 1.0:
            raise InvalidModelError(f"transmittance must lie in (0, 1), got {self.transmittance!r}")
        if not (math.isfinite(self.round_trip_length) and self.round_trip_length > 0.0):
            raise InvalidModelError(f"round-trip length must be positive, got {self.round_trip_length!r}")
        if not isinstance(self.loss, LossLine) and not 0.0 <= self.loss < 1.0:
            raise InvalidModelError(f"fixed loss must lie in [0, 1), got {self.loss!r}")
        if self.threshold is not None and not (math.isfinite(self.threshold) and self.threshold > 0.0):
            raise InvalidModelError(f"threshold must be positive, got {self.threshold!r}")

    def loss_at(self, x: float) -> float:
        if isinstance(self.loss, LossLine):
            return intracavity_loss(self.loss, x)
        return float(self.loss)

    @property
    def loss_coefficients(self) -> tuple[float, float]:
        """``(intercept, slope)``; a fixed loss has zero slope."""
        if isinstance(self.loss, LossLine):
            return self.loss.intercept, self.loss.slope
        return float(self.loss), 0.0


@dataclass(frozen=True)
class DetectionChain:
    """Homodyne detection chain.

    ``theta_rms`` is stored in radians; use :meth:`with_phase_deg` or
    :attr:`phase_rms_deg` at degree-valued boundaries.
    """

    eta: float
    xi: float
    zeta: float
    theta_rms: float = 0.0
    circuit_floor: CircuitNoiseFloor = NO_FLOOR
    measurement_freq: float = 0.0
    freq_convention: FrequencyConvention = FrequencyConvention.ANGULAR

    def __post_init__(self):
        for name in ("eta", "xi", "zeta"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise InvalidModelError(f"{name} must lie in (0, 1], got {v!r}")
        if not 0.0 <= self.theta_rms < math.pi / 4:
            raise InvalidModelError(f"phase jitter must lie in [0, 45) degrees, got {math.degrees(self.theta_rms)!r}")
        if not (math.isfinite(self.measurement_freq) and self.measurement_freq >= 0.0):
            raise InvalidModelError(f"measurement frequency must be >= 0, got {self.measurement_freq!r}")
        object.__setattr__(self, "freq_convention", FrequencyConvention(self.freq_convention))

    @property
    def phase_rms_deg(self) -> float:
        return math.degrees(self.theta_rms)

    def with_phase_deg(self, degrees: float) -> DetectionChain:
        return replace(self, theta_rms=math.radians(degrees))

    @property
    def detection_efficiency(self) -> float:
        """``eta * xi**2 * zeta``: everything except the cavity escape efficiency."""
        return self.eta * self.xi**2 * self.zeta


@dataclass(frozen=True)
class QuadraturePair:
    squeezed: NoiseLevel
    antisqueezed: NoiseLevel

    def __post_init__(self):
        if self.squeezed.value > self.antisqueezed.value:
            raise InvalidArgumentError("squeezed variance exceeds antisqueezed variance")

    @classmethod
    def from_linear(cls, squeezed: float, antisqueezed: float) -> QuadraturePair:
        return cls(NoiseLevel(squeezed), NoiseLevel(antisqueezed))

    @classmethod
    def from_db(cls, squeezed_db: float, antisqueezed_db: float,
                squeezed_sigma_db: float | None = None,
                antisqueezed_sigma_db: float | None = None) -> QuadraturePair:
        return cls(NoiseLevel.from_db(squeezed_db, squeezed_sigma_db),
                   NoiseLevel.from_db(antisqueezed_db, antisqueezed_sigma_db))

    @property
    def db(self) -> tuple[float, float]:
        return self.squeezed.db, self.antisqueezed.db

    @property
    def linear(self) -> tuple[float, float]:
        return self.squeezed.value, self.antisqueezed.value


def _check_x(x: float) -> float:
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"normalized pump power must be >= 0, got {x!r}")
    if x >= 1.0:
        raise AboveThresholdError(f"normalized pump power {x!r} is at or above threshold")
    return x


def escape_efficiency(params: OpoParams, x: float = 0.0) -> float:
    """Fraction ``T/(T+L(x))`` of intracavity light leaving through the coupler."""
    t = params.transmittance
    return t / (t + params.loss_at(x))


def decay_rate(params: OpoParams, x: float = 0.0) -> float:
    """Cavity decay rate ``gamma = c*(T+L)/l`` in 1/s."""
    return C_LIGHT * (params.transmittance + params.loss_at(x)) / params.round_trip_length


def normalized_frequency(params: OpoParams, chain: DetectionChain, x: float = 0.0) -> float:
    """Measurement frequency in units of the cavity decay rate."""
    f = chain.measurement_freq
    if chain.freq_convention is FrequencyConvention.ANGULAR:
        f = 2.0 * math.pi * f
    return f / decay_rate(params, x)


def total_efficiency(params: OpoParams, chain: DetectionChain, x: float = 0.0) -> float:
    return chain.detection_efficiency * escape_efficiency(params, x)


def squeezing_pair(efficiency: float, x: float, omega: float) -> QuadraturePair:
    """Generated variances for given total efficiency, pump and normalized frequency."""
    x = _check_x(x)
    d = 4.0 * omega * omega
    lo = (1.0 - x) ** 2 + d
    hi = (1.0 + x) ** 2 + d
    # 1 - 4Ex/hi written without the cancellation near x -> 1
    r_minus = (lo + 4.0 * x * (1.0 - efficiency)) / hi
    r_plus = 1.0 + efficiency * 4.0 * x / lo
    return QuadraturePair.from_linear(r_minus, r_plus)


def generated_pair(params: OpoParams, chain: DetectionChain, x: float) -> QuadraturePair:
    """Squeezed/antisqueezed variances before phase jitter and circuit noise."""
    x = _check_x(x)
    return squeezing_pair(total_efficiency(params, chain, x), x, normalized_frequency(params, chain, x))


def phase_mix(generated: QuadraturePair, theta_rms: float) -> QuadraturePair:
    """Mix the quadratures by ``cos**2``/``sin**2`` of the rms phase jitter."""
    if not 0.0 <= theta_rms <= math.pi / 4:
        raise DomainError(f"phase jitter must lie in [0, 45] degrees, got {math.degrees(theta_rms)!r}")
    c2 = math.cos(theta_rms) ** 2
    s2 = math.sin(theta_rms) ** 2
    rm, rp = generated.linear
    return QuadraturePair.from_linear(rm * c2 + rp * s2, rp * c2 + rm * s2)


def predict_observed(params: OpoParams, chain: DetectionChain, x: float) -> QuadraturePair:
    """Levels a spectrum analyzer would show, normalized to its own shot-noise trace."""
    mixed = phase_mix(generated_pair(params, chain, x), chain.theta_rms)
    floor = chain.circuit_floor
    return QuadraturePair(add_circuit_noise(mixed.squeezed, floor),
                          add_circuit_noise(mixed.antisqueezed, floor))


def pump_power_to_x(power: float, threshold: float) -> float:
    """``sqrt(P/P_th)``; any consistent power unit."""
    if not (math.isfinite(threshold) and threshold > 0.0):
        raise DomainError(f"threshold must be positive, got {threshold!r}")
    if math.isnan(power) or power < 0.0:
        raise DomainError(f"pump power must be >= 0, got {power!r}")
    if power >= threshold:
        raise AboveThresholdError(f"pump power {power!r} is at or above threshold {threshold!r}")
    return math.sqrt(power / threshold)


def gain_to_x(gain: float) -> float:
    """Normalized pump power from the parametric amplification factor, ``1 - 1/sqrt(G)``."""
    if not (math.isfinite(gain) and gain >= 1.0):
        raise DomainError(f"parametric gain must be >= 1, got {gain!r}")
    return 1.0 - 1.0 / math.sqrt(gain)


def kernel_args(params: OpoParams, chain: DetectionChain, *, apply_floor: bool = True) -> dict:
    """Flatten a configuration into the scalar arguments the numeric kernels take."""
    loss0, loss1 = params.loss_coefficients
    wfreq = chain.measurement_freq
    if chain.freq_convention is FrequencyConvention.ANGULAR:
        wfreq = 2.0 * math.pi * wfreq
    return dict(
        theta=chain.theta_rms,
        loss0=loss0,
        loss1=loss1,
        transmittance=params.transmittance,
        length=params.round_trip_length,
        eff=chain.detection_efficiency,
        wfreq=wfreq,
        n_c=chain.circuit_floor.linear if apply_floor else 0.0,
    )
