"""Inverse problems: from measured levels and gains back to model parameters."""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DomainError,
    FitFailureError,
    InconsistentInputsError,
    InvalidArgumentError,
    NoSqueezingError,
    SingularInversionError,
    SqueezingError,
    UnderdeterminedError,
    UnstableEstimateError,
)
from .opomodel import LossLine, QuadraturePair
from .quadmath import CircuitNoiseFloor, NoiseLevel, subtract_circuit_noise


@dataclass(frozen=True)
class GainPoint:
    """Parametric amplification ``gain`` measured at pump power ``power``."""

    power: float
    gain: float
    sigma: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.power) and self.power >= 0.0):
            raise DomainError(f"pump power must be >= 0, got {self.power!r}")
        if not (math.isfinite(self.gain) and self.gain >= 1.0):
            raise DomainError(f"gain must be >= 1 at the amplified phase, got {self.gain!r}")
        if self.sigma is not None and not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise DomainError(f"gain sigma must be >= 0, got {self.sigma!r}")


@dataclass(frozen=True)
class LossPoint:
    x: float
    loss: float

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise DomainError(f"normalized pump power must lie in [0, 1], got {self.x!r}")
        if not 0.0 <= self.loss < 1.0:
            raise DomainError(f"loss must lie in [0, 1), got {self.loss!r}")


@dataclass(frozen=True)
class FitResult:
    estimate: float
    sigma: float
    residual_norm: float
    n_points: int
    residuals: tuple[float, ...] = ()


@dataclass(frozen=True)
class LossLineFit:
    intercept: float
    slope: float
    intercept_sigma: float
    slope_sigma: float
    residual_norm: float
    n_points: int
    residuals: tuple[float, ...] = ()

    @property
    def line(self) -> LossLine:
        """The fitted coefficients as a validated :class:`LossLine`."""
        return LossLine(self.intercept, self.slope)


class Side(str, Enum):
    SQUEEZED = "squeezed"
    ANTISQUEEZED = "antisqueezed"
    BOTH = "both"


def invert_phase_mix(observed: QuadraturePair, theta_rms: float) -> QuadraturePair:
    """Undo the jitter mixing exactly.

    Raises
    ------
    SingularInversionError
        At 45 degrees of jitter, where both quadratures are mixed equally.
    InconsistentInputsError
        If the recovered squeezed variance is not positive.
    """
    if math.isnan(theta_rms) or theta_rms < 0.0:
        raise DomainError(f"phase jitter must be >= 0, got {theta_rms!r}")
    if theta_rms >= math.pi / 4:
        raise SingularInversionError("phase mixing is not invertible at or beyond 45 degrees")
    c2 = math.cos(theta_rms) ** 2
    s2 = math.sin(theta_rms) ** 2
    det = math.cos(2.0 * theta_rms)
    om, op = observed.linear
    r_minus = (om * c2 - op * s2) / det
    r_plus = (op * c2 - om * s2) / det
    if not r_minus > 0.0:
        raise InconsistentInputsError(
            "antisqueezing is too large for this jitter: recovered squeezed variance is not positive"
        )
    return QuadraturePair.from_linear(r_minus, r_plus)


def response_factors(x: float, omega: float) -> tuple[float, float]:
    """``(k_-, k_+)`` with ``R_pm = 1 +- E * k_pm``."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"normalized pump power must lie in (0, 1), got {x!r}")
    d = 4.0 * omega * omega
    return 4.0 * x / ((1.0 + x) ** 2 + d), 4.0 * x / ((1.0 - x) ** 2 + d)


def estimate_total_efficiency(generated: QuadraturePair, x: float, omega: float,
                              side: Side | str = Side.SQUEEZED) -> FitResult:
    """Solve the generated-level model for ``E = eta*xi**2*zeta*rho``.

    The total loss is ``1 - estimate``. With ``side="both"`` the two
    equations are combined by linear least squares, weighted by the pair's
    sigmas when both are present.
    """
    side = Side(side)
    k_minus, k_plus = response_factors(x, omega)
    rm = generated.squeezed
    rp = generated.antisqueezed
    if side is not Side.ANTISQUEEZED and not rm.value < 1.0:
        raise NoSqueezingError("squeezed level is not below shot noise")

    if side is Side.SQUEEZED:
        e = (1.0 - rm.value) / k_minus
        sigma = 0.0 if rm.sigma is None else rm.sigma / k_minus
        result = FitResult(e, sigma, 0.0, 1)
    elif side is Side.ANTISQUEEZED:
        e = (rp.value - 1.0) / k_plus
        sigma = 0.0 if rp.sigma is None else rp.sigma / k_plus
        result = FitResult(e, sigma, 0.0, 1)
    else:
        # model: R_-  - 1 = -E k_-,  R_+ - 1 = +E k_+
        y = np.array([rm.value - 1.0, rp.value - 1.0])
        a = np.array([-k_minus, k_plus])
        weighted = bool(rm.sigma and rp.sigma)
        w = np.array([rm.sigma ** -2, rp.sigma ** -2]) if weighted else np.ones(2)
        normal = float(np.sum(w * a * a))
        e = float(np.sum(w * a * y)) / normal
        res = y - a * e
        if weighted:
            sigma = math.sqrt(1.0 / normal)
        else:
            sigma = math.sqrt(float(res @ res) / normal)
        result = FitResult(e, sigma, math.sqrt(float(res @ res) / 2.0), 2, tuple(res))
    if not 0.0 < result.estimate <= 1.0 + 1e-12:
        raise InconsistentInputsError(
            f"inferred total efficiency {result.estimate:.6g} lies outside (0, 1]"
        )
    return result


def threshold_from_gain(power: float, gain: float) -> float:
    """Closed-form threshold through one ``(P, G)`` point: ``P/(1 - 1/sqrt(G))**2``."""
    if not gain > 1.0:
        raise UnderdeterminedError("gain of exactly 1 carries no threshold information")
    return power / (1.0 - 1.0 / math.sqrt(gain)) ** 2


def _gain_model(powers: np.ndarray, p_th: float) -> tuple[np.ndarray, np.ndarray]:
    x = np.sqrt(powers / p_th)
    g = 1.0 / (1.0 - x) ** 2
    dg = -x / ((1.0 - x) ** 3 * p_th)
    return g, dg


def fit_threshold(points: Sequence[GainPoint], *, max_iter: int = 100,
                  rtol: float = 1e-10) -> FitResult:
    """Least-squares oscillation threshold from parametric-gain data.

    Fits ``G(P) = 1/(1 - sqrt(P/P_th))**2`` by damped Gauss-Newton on the
    single parameter ``P_th``, starting from the closed-form inversion of the
    highest-gain point. Gain residuals are weighted by ``1/sigma**2`` when
    every point carries a sigma.
    """
    points = list(points)
    if not points:
        raise InvalidArgumentError("no gain points given")
    powers = np.array([p.power for p in points], dtype=float)
    gains = np.array([p.gain for p in points], dtype=float)
    if len(np.unique(powers)) != len(powers):
        raise InvalidArgumentError("pump powers must be distinct")
    informative = (gains > 1.0) & (powers > 0.0)
    if not np.any(informative):
        raise UnderdeterminedError("no point with gain above 1 at nonzero pump power")

    i0 = int(np.argmax(np.where(informative, gains, -np.inf)))
    p_th = threshold_from_gain(float(powers[i0]), float(gains[i0]))
    if len(points) == 1:
        return FitResult(p_th, 0.0, 0.0, 1, (0.0,))

    sigmas = [p.sigma for p in points]
    weighted = all(s is not None and s > 0.0 for s in sigmas)
    w = np.array([s ** -2 for s in sigmas]) if weighted else np.ones(len(points))
    # iterate on u = P_th / P_max so the arithmetic does not depend on the power unit
    p_max = float(powers.max())
    q = powers / p_max
    u = p_th / p_max

    def cost(uu):
        g, _ = _gain_model(q, uu)
        r = gains - g
        return float(np.sum(w * r * r))

    if u <= 1.0:
        u = 1.01
    current = cost(u)
    for _ in range(max_iter):
        g, dg = _gain_model(q, u)
        r = gains - g
        step = float(np.sum(w * dg * r)) / float(np.sum(w * dg * dg))
        # damping: stay above the largest pump power and never increase the cost
        lam = 1.0
        while True:
            trial = u + lam * step
            if trial > 1.0:
                c = cost(trial)
                if c <= current:
                    break
            lam *= 0.5
            if lam < 1e-12:
                trial, c = u, current
                break
        converged = abs(trial - u) <= rtol * abs(u)
        u, current = trial, c
        if converged:
            break
    else:
        raise FitFailureError(f"threshold fit did not converge in {max_iter} iterations", u * p_max)

    g, dg = _gain_model(q, u)
    r = gains - g
    normal = float(np.sum(w * dg * dg))
    n = len(points)
    if weighted:
        sigma_u = math.sqrt(1.0 / normal)
    else:
        sigma_u = math.sqrt(float(r @ r) / (n - 1) / normal)
    return FitResult(u * p_max, sigma_u * p_max, math.sqrt(float(r @ r) / n), n, tuple(r.tolist()))


def fit_loss_line(points: Sequence[LossPoint]) -> LossLineFit:
    """Ordinary least-squares line through ``(x, L)`` points."""
    points = list(points)
    xs = np.array([p.x for p in points], dtype=float)
    ls = np.array([p.loss for p in points], dtype=float)
    if len(np.unique(xs)) < 2:
        raise UnderdeterminedError("a loss line needs at least two distinct x values")
    n = len(points)
    xm = xs.mean()
    lm = ls.mean()
    sxx = float(np.sum((xs - xm) ** 2))
    slope = float(np.sum((xs - xm) * (ls - lm))) / sxx
    intercept = float(lm - slope * xm)
    res = ls - (intercept + slope * xs)
    rss = float(res @ res)
    if n > 2:
        s2 = rss / (n - 2)
        slope_sigma = math.sqrt(s2 / sxx)
        intercept_sigma = math.sqrt(s2 * (1.0 / n + xm * xm / sxx))
    else:
        slope_sigma = intercept_sigma = 0.0
    return LossLineFit(intercept, slope, intercept_sigma, slope_sigma,
                       math.sqrt(rss / n), n, tuple(res.tolist()))


# ---------------------------------------------------------------------------
# resampling


def _pipe_invert(squeezed_db, antisqueezed_db, theta_rms):
    gen = invert_phase_mix(QuadraturePair.from_db(squeezed_db, antisqueezed_db), theta_rms)
    return {"generated_squeezed_db": gen.squeezed.db, "generated_antisqueezed_db": gen.antisqueezed.db}


def _pipe_correct_invert(squeezed_db, antisqueezed_db, theta_rms, floor_db, x, omega):
    floor = CircuitNoiseFloor(floor_db)
    sq = subtract_circuit_noise(NoiseLevel.from_db(squeezed_db), floor)
    asq = subtract_circuit_noise(NoiseLevel.from_db(antisqueezed_db), floor)
    gen = invert_phase_mix(QuadraturePair(sq, asq), theta_rms)
    out = {
        "corrected_squeezed_db": sq.db,
        "corrected_antisqueezed_db": asq.db,
        "generated_squeezed_db": gen.squeezed.db,
        "generated_antisqueezed_db": gen.antisqueezed.db,
    }
    # unclamped solves: noisy samples may leave (0, 1] without being failures
    k_minus, k_plus = response_factors(x, omega)
    out["total_loss_squeezed"] = 1.0 - (1.0 - gen.squeezed.value) / k_minus
    out["total_loss_antisqueezed"] = 1.0 - (gen.antisqueezed.value - 1.0) / k_plus
    return out


PIPELINES: dict[str, Callable[..., Mapping[str, float]]] = {
    "invert_phase_mix": _pipe_invert,
    "correct_and_invert": _pipe_correct_invert,
}


def resample_uncertainty(inputs: Mapping[str, float | tuple[float, float]],
                         pipeline: str | Callable[..., Mapping[str, float]],
                         n_samples: int = 10_000, seed: int = 0,
                         max_failure_rate: float = 0.2) -> dict[str, FitResult]:
    """Monte Carlo propagation of Gaussian input errors through a pipeline.

    ``inputs`` maps keyword names to a value or ``(value, sigma)``. All
    normal deviates are drawn up front as an ``(n_samples, n_inputs)`` block
    from Philox keyed by ``seed``, so row ``i`` depends only on the seed and
    ``i``. Returns mean and sample standard deviation of each output.
    """
    if isinstance(pipeline, str):
        try:
            fn = PIPELINES[pipeline]
        except KeyError:
            raise InvalidArgumentError(f"unknown pipeline {pipeline!r}") from None
    else:
        fn = pipeline
    if n_samples < 100:
        raise InvalidArgumentError("n_samples must be >= 100")

    names = list(inputs)
    centre = np.empty(len(names))
    sigma = np.zeros(len(names))
    for k, name in enumerate(names):
        v = inputs[name]
        if isinstance(v, tuple):
            centre[k], sigma[k] = v
        else:
            centre[k] = v
    if np.any(sigma < 0.0) or not np.all(np.isfinite(sigma)):
        raise InvalidArgumentError("input sigmas must be non-negative and finite")

    rng = np.random.Generator(np.random.Philox(key=seed))
    draws = centre + sigma * rng.standard_normal((n_samples, len(names)))

    rows: list[Mapping[str, float]] = []
    failures = 0
    for row in draws:
        try:
            rows.append(fn(**dict(zip(names, row.tolist()))))
        except (SqueezingError, ValueError, ZeroDivisionError):
            failures += 1
    if failures > max_failure_rate * n_samples:
        raise UnstableEstimateError(f"{failures} of {n_samples} resampled evaluations failed")

    out = {}
    for key in rows[0]:
        vals = np.array([r[key] for r in rows])
        std = 0.0 if np.all(vals == vals[0]) else float(np.std(vals, ddof=1))
        out[key] = FitResult(float(vals.mean()), std, 0.0, len(vals))
    return out

