"""Direct averaging of the quadrature variance over sampled phase jitter.

The closed-form mixing in :func:`sqzbudget.opomodel.phase_mix` uses
``cos(theta_rms)**2``. Averaging over a jitter distribution instead gives
``E[cos(theta)**2]``; this module estimates that average by sampling and
computes it in closed form so the two can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._accel import kernels
from .errors import DomainError, InvalidArgumentError
from .opomodel import QuadraturePair, phase_mix
from .quadmath import linear_to_db

RNG_ALGORITHM = "numpy Philox4x64-10, SeedSequence(seed).spawn(n_batches), standard_normal/uniform float64"
BATCH_SIZE = 1 << 16


class Distribution(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class JitterSpec:
    """Zero-mean phase jitter with the given ``rms`` in radians.

    A uniform distribution is taken on ``[-sqrt(3)*rms, +sqrt(3)*rms]``.
    """

    distribution: Distribution = Distribution.GAUSSIAN
    rms: float = 0.0
    n_samples: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        if not (math.isfinite(self.rms) and self.rms >= 0.0):
            raise InvalidArgumentError(f"jitter rms must be >= 0, got {self.rms!r}")
        if self.n_samples < 1000:
            raise InvalidArgumentError(f"n_samples must be >= 1000, got {self.n_samples!r}")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be non-negative")


@dataclass(frozen=True)
class MixedPairEstimate:
    squeezed: float
    antisqueezed: float
    squeezed_stderr: float
    antisqueezed_stderr: float
    n_samples: int
    rng_algorithm: str = RNG_ALGORITHM

    @property
    def db(self) -> tuple[float, float]:
        return linear_to_db(self.squeezed), linear_to_db(self.antisqueezed)


def _draw(rng: np.random.Generator, spec: JitterSpec, n: int) -> np.ndarray:
    if spec.distribution is Distribution.GAUSSIAN:
        return spec.rms * rng.standard_normal(n)
    half = math.sqrt(3.0) * spec.rms
    return rng.uniform(-half, half, n)


def sin2_statistics(spec: JitterSpec) -> tuple[float, float]:
    """Sample mean and variance of ``sin(theta)**2`` over ``spec.n_samples`` draws.

    Draws come in fixed-size batches, each from its own Philox substream
    spawned from ``spec.seed``; batch moments are merged in batch order, so
    the result does not depend on how batches are scheduled.
    """
    n_batches = -(-spec.n_samples // BATCH_SIZE)
    children = np.random.SeedSequence(spec.seed).spawn(n_batches)
    count = 0
    mean = 0.0
    m2 = 0.0
    for b, child in enumerate(children):
        n_b = min(BATCH_SIZE, spec.n_samples - b * BATCH_SIZE)
        rng = np.random.Generator(np.random.Philox(child))
        mean_b, m2_b = kernels.sin2_moments(_draw(rng, spec, n_b))
        # pairwise merge of (count, mean, M2)
        total = count + n_b
        delta = mean_b - mean
        mean += delta * n_b / total
        m2 += m2_b + delta * delta * count * n_b / total
        count = total
    return mean, m2 / (count - 1)


def mc_mixed_pair(generated: QuadraturePair, spec: JitterSpec) -> MixedPairEstimate:
    """Sampled average of the instantaneous variances, with standard errors of the mean."""
    rm, rp = generated.linear
    if spec.rms == 0.0:
        return MixedPairEstimate(rm, rp, 0.0, 0.0, spec.n_samples)
    s2_mean, s2_var = sin2_statistics(spec)
    spread = rp - rm
    stderr = spread * math.sqrt(s2_var / spec.n_samples)
    # R_- cos^2 + R_+ sin^2 = R_- + (R_+ - R_-) sin^2
    return MixedPairEstimate(rm + spread * s2_mean, rp - spread * s2_mean, stderr, stderr, spec.n_samples)


def expected_cos2(theta_rms: float, distribution: Distribution | str = Distribution.GAUSSIAN) -> float:
    """``E[cos(theta)**2]`` for zero-mean jitter of the given rms."""
    distribution = Distribution(distribution)
    if distribution is Distribution.GAUSSIAN:
        return 0.5 * (1.0 + math.exp(-2.0 * theta_rms * theta_rms))
    z = 2.0 * math.sqrt(3.0) * theta_rms
    sinc = 1.0 if z == 0.0 else math.sin(z) / z
    return 0.5 * (1.0 + sinc)


def expected_mixed_pair(generated: QuadraturePair, theta_rms: float,
                        distribution: Distribution | str = Distribution.GAUSSIAN) -> QuadraturePair:
    c2 = expected_cos2(theta_rms, distribution)
    s2 = 1.0 - c2
    rm, rp = generated.linear
    return QuadraturePair.from_linear(rm * c2 + rp * s2, rp * c2 + rm * s2)


def approximation_gap(generated: QuadraturePair, theta_rms: float,
                      distribution: Distribution | str = Distribution.GAUSSIAN) -> float:
    """Squeezed level under exact averaging minus the ``cos(theta_rms)**2`` value, in dB."""
    if not 0.0 <= theta_rms <= math.radians(20.0):
        raise DomainError("approximation gap is evaluated for jitter in [0, 20] degrees")
    exact = expected_mixed_pair(generated, theta_rms, distribution).squeezed.value
    literal = phase_mix(generated, theta_rms).squeezed.value
    return linear_to_db(exact) - linear_to_db(literal)
