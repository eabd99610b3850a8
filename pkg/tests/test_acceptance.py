"""Acceptance criteria for the squeezing budget.

Each criterion is a function returning ``(passed, detail)``. Under pytest
every criterion is one test and prints a ``PASS``/``FAIL`` line to the
terminal; run this file directly to get the same lines without pytest.
"""

import math
import sys

import numpy as np
import pytest

from sqzbudget import (
    CircuitNoiseFloor,
    DetectionChain,
    GainPoint,
    JitterSpec,
    OpoParams,
    QuadraturePair,
    estimate_total_efficiency,
    find_x_opt,
    fit_threshold,
    invert_phase_mix,
    mc_mixed_pair,
    phase_mix,
    predict_observed,
    reference_config,
    resample_uncertainty,
    subtract_circuit_noise,
    sweep_surface,
)
from sqzbudget.estimate import threshold_from_gain
from sqzbudget.montecarlo import expected_mixed_pair
from sqzbudget._numpy_kernels import observed_squeezed
from sqzbudget.opomodel import escape_efficiency, kernel_args, normalized_frequency, squeezing_pair
from sqzbudget.optimize import X_MAX

THETA = math.radians(1.5)
X_100 = math.sqrt(100.0 / 180.0)
FLOOR = CircuitNoiseFloor(-21.7)
OBSERVED = QuadraturePair.from_db(-9.01, 15.12, 0.15, 0.14)
POWERS = (10, 20, 50, 65, 90, 100, 120, 130, 150)
MEASURED = OpoParams(0.123, 0.5, 0.0038, 0.180)


def _ideal(theta_deg, freq=0.0, convention="angular"):
    chain = DetectionChain(1.0, 1.0, 1.0, math.radians(theta_deg), CircuitNoiseFloor(-math.inf), freq, convention)
    return OpoParams(0.123, 0.5, 0.0), chain


def _corrected():
    return QuadraturePair(subtract_circuit_noise(OBSERVED.squeezed, FLOOR),
                          subtract_circuit_noise(OBSERVED.antisqueezed, FLOOR))


def _omega(convention="angular"):
    chain = DetectionChain(0.998, 0.988, 0.99, THETA, FLOOR, 1e6, convention)
    return normalized_frequency(MEASURED, chain, X_100)


def criterion_1():
    checks = []
    for deg, target in ((1.5, -12.81), (3.9, -8.66)):
        base = find_x_opt(*_ideal(deg)).best_squeezed_db
        checks.append((abs(base - target) <= 0.05, f"{deg} deg: {base:.3f} dB (target {target})"))
        for conv in ("angular", "cyclic"):
            shifted = find_x_opt(*_ideal(deg, 1e6, conv)).best_squeezed_db
            checks.append((abs(shifted - base) < 0.05, f"{conv} 1 MHz shift {shifted - base:+.2e} dB"))
    return all(ok for ok, _ in checks), "; ".join(d for _, d in checks)


def criterion_2():
    sq, asq = _corrected().db
    ok = abs(sq - -9.22) <= 0.005 and abs(asq - 15.15) <= 0.005
    return ok, f"corrected {sq:.4f} / {asq:+.4f} dB (target -9.22 / +15.15 +- 0.005)"


def criterion_3():
    sq, asq = invert_phase_mix(_corrected(), THETA).db
    ok = abs(sq - -10.12) <= 0.02 and abs(asq - 15.15) <= 0.02
    return ok, f"generated {sq:.4f} / {asq:+.4f} dB (target -10.12 / +15.15 +- 0.02)"


def criterion_4():
    res = resample_uncertainty(
        {
            "squeezed_db": (-9.01, 0.15),
            "antisqueezed_db": (15.12, 0.14),
            "theta_rms": THETA,
            "floor_db": -21.7,
            "x": X_100,
            "omega": _omega(),
        },
        "correct_and_invert", n_samples=10_000, seed=0,
    )
    sigma = res["generated_squeezed_db"].sigma
    return abs(sigma - 0.18) <= 0.04, f"generated squeezing sigma {sigma:.4f} dB (target 0.18 +- 0.04)"


def criterion_5():
    gen = invert_phase_mix(_corrected(), THETA)
    loss = 1.0 - estimate_total_efficiency(gen, X_100, _omega(), "squeezed").estimate
    product = 1.0 - escape_efficiency(MEASURED, X_100) * 0.99 * 0.988 ** 2 * 0.998
    ok = abs(loss - 0.0709) <= 0.008 and round(product, 4) == 0.0645
    return ok, f"squeezed-side loss {loss:.5f} (target 0.0709 +- 0.008); product {product:.4f} (target 0.0645)"


def criterion_6():
    cfg = reference_config()
    sq, asq = predict_observed(cfg.opo_params(), cfg.detection_chain(), X_100).db
    ok = abs(sq - -9.01) <= 0.5 and abs(asq - 15.12) <= 0.5
    return ok, f"predicted {sq:.3f} / {asq:+.3f} dB at 100 mW (target -9.01 / +15.12 +- 0.5)"


def criterion_7():
    cfg = reference_config()
    params, chain = cfg.opo_params(), cfg.detection_chain()
    rep = find_x_opt(params, chain)
    x_opt = rep.x_opt
    xs = np.linspace(x_opt, 0.999, 400)
    levels = np.array([predict_observed(params, chain, float(x)).db[0] for x in xs])
    monotone = bool(np.all(np.diff(levels) > 0))
    ok = abs(x_opt - 0.82) <= 0.05 and monotone
    return ok, (f"x_opt {x_opt:.4f} (target 0.82 +- 0.05), best {rep.best_squeezed_db:.3f} dB; "
                f"worsens monotonically above x_opt: {monotone}")


def criterion_8():
    gains = [GainPoint(p, 1.0 / (1.0 - math.sqrt(p / 180.0)) ** 2) for p in POWERS]
    fitted = fit_threshold(gains).estimate
    single = threshold_from_gain(100.0, 18.7)
    ok = abs(fitted / 180.0 - 1.0) <= 1e-3 and abs(single - 169.2) <= 0.5
    return ok, f"synthetic fit {fitted:.6f} mW (target 180 +- 0.1%); single point {single:.3f} mW (target 169.2 +- 0.5)"


def criterion_9():
    cfg = reference_config()
    table = sweep_surface(cfg.opo_params(), cfg.detection_chain(), [0.0, 1.5], [0.0038], "follow_line")
    cell = float(table.columns["best_squeezed_db"][1, 0])
    path0 = float(table.path.columns["best_squeezed_db"][0])
    ok = cell < -9.0 and path0 < -10.0
    return ok, f"surface cell (1.5 deg, 0.0038) {cell:.3f} dB (< -9); loss-line path at 0 deg {path0:.3f} dB (< -10)"


def criterion_10():
    rng = np.random.Generator(np.random.Philox(key=2024))
    failures = []

    # sum preservation; cos^2 + sin^2 is itself only 1 to rounding, so allow a few ulps
    worst = 0.0
    for _ in range(2000):
        pair = QuadraturePair.from_linear(rng.uniform(0.01, 1.0), rng.uniform(1.0, 100.0))
        mixed = phase_mix(pair, rng.uniform(0.0, math.pi / 4))
        worst = max(worst, abs(sum(mixed.linear) / sum(pair.linear) - 1.0))
    if worst > 1e-15:
        failures.append(f"sum {worst:.1e}")

    # purity at E = 1, Omega = 0
    purity = max(abs(math.prod(squeezing_pair(1.0, x, 0.0).linear) - 1.0) for x in rng.uniform(0.0, 0.999999, 2000))
    if purity > 1e-12:
        failures.append(f"purity {purity:.1e}")

    # mix/invert round trip
    trip = 0.0
    for _ in range(2000):
        pair = QuadraturePair.from_linear(rng.uniform(0.05, 1.0), rng.uniform(1.0, 40.0))
        theta = rng.uniform(0.0, math.radians(40.0))
        back = invert_phase_mix(phase_mix(pair, theta), theta)
        trip = max(trip, *(abs(b / a - 1.0) for a, b in zip(pair.linear, back.linear)))
    if trip > 1e-10:
        failures.append(f"round trip {trip:.1e}")

    # optimizer against a 1e5-point brute-force scan
    gap = 0.0
    for _ in range(10):
        params = OpoParams(rng.uniform(0.05, 0.2), rng.uniform(0.2, 1.0), rng.uniform(0.0, 0.02))
        chain = DetectionChain(rng.uniform(0.9, 1.0), rng.uniform(0.95, 1.0), rng.uniform(0.9, 1.0),
                               math.radians(rng.uniform(0.3, 6.0)), CircuitNoiseFloor(rng.uniform(-30, -15)), 1e6)
        scan = observed_squeezed(np.linspace(0.0, X_MAX, 100_001), **kernel_args(params, chain))
        gap = max(gap, abs(find_x_opt(params, chain).best_squeezed_db - 10 * math.log10(scan.min())))
    if gap > 1e-3:
        failures.append(f"optimizer {gap:.1e} dB")

    # Monte Carlo against the Gaussian moment, and seed determinism
    pair = QuadraturePair.from_linear(0.0973, 32.75)
    spec = JitterSpec("gaussian", THETA, 1_000_000, 1)
    est = mc_mixed_pair(pair, spec)
    z = abs(est.squeezed - expected_mixed_pair(pair, THETA).squeezed.value) / est.squeezed_stderr
    if z > 3.0:
        failures.append(f"MC {z:.2f} SE")
    if mc_mixed_pair(pair, spec) != est:
        failures.append("seed determinism")

    detail = (f"sum {worst:.1e}, purity {purity:.1e}, round trip {trip:.1e}, optimizer {gap:.1e} dB, "
              f"MC {z:.2f} SE, seed repeat bit-exact: {'seed determinism' not in failures}")
    return not failures, detail


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def _line(index, passed, detail):
    return f"{'PASS' if passed else 'FAIL'} criterion {index}: {detail}"


@pytest.mark.parametrize("index", range(1, len(CRITERIA) + 1))
def test_criterion(index, capsys):
    passed, detail = CRITERIA[index - 1]()
    with capsys.disabled():
        print("\n" + _line(index, passed, detail))
    assert passed, detail


if __name__ == "__main__":
    results = [(i, *c()) for i, c in enumerate(CRITERIA, start=1)]
    for r in results:
        print(_line(*r))
    sys.exit(0 if all(ok for _, ok, _ in results) else 1)
