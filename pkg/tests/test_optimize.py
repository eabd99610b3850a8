import math

import numpy as np
import pytest
from conftest import REF_LINE, ideal_chain

from sqzbudget import OpoParams, find_x_opt, predict_observed, sweep_pump, sweep_surface
from sqzbudget._accel import kernels
from sqzbudget._numpy_kernels import observed_squeezed
from sqzbudget.errors import AboveThresholdError, DomainError, InvalidArgumentError, InvalidModelError
from sqzbudget.opomodel import DetectionChain, generated_pair, kernel_args
from sqzbudget.optimize import X_MAX, Axis, SweepTable
from sqzbudget.quadmath import CircuitNoiseFloor


def ideal_optimum(theta):
    r = math.sqrt(math.tan(theta))
    return (1 - r) / (1 + r), 10 * math.log10(math.sin(2 * theta))


@pytest.mark.parametrize("deg", [0.5, 1.5, 3.9, 10.0, 30.0])
def test_ideal_analytic_oracle(lossless_params, deg):
    rep = find_x_opt(lossless_params, ideal_chain(deg))
    x_true, level = ideal_optimum(math.radians(deg))
    assert not rep.boundary
    assert rep.x_opt == pytest.approx(x_true, abs=1e-5)
    assert rep.best_squeezed_db == pytest.approx(level, abs=1e-9)
    assert rep.bracket[0] <= x_true <= rep.bracket[1]


def test_ideal_limits(lossless_params):
    assert find_x_opt(lossless_params, ideal_chain(1.5)).best_squeezed_db == pytest.approx(-12.81, abs=0.05)
    assert find_x_opt(lossless_params, ideal_chain(3.9)).best_squeezed_db == pytest.approx(-8.66, abs=0.05)


@pytest.mark.parametrize("convention", ["angular", "cyclic"])
def test_measurement_frequency_moves_only_x_opt(lossless_params, convention):
    base = find_x_opt(lossless_params, ideal_chain(1.5))
    rep = find_x_opt(lossless_params, ideal_chain(1.5, 1e6, convention))
    assert abs(rep.best_squeezed_db - base.best_squeezed_db) < 0.05


def _brute(params, chain, apply_floor=True, n=100_001):
    args = kernel_args(params, chain, apply_floor=apply_floor)
    xs = np.linspace(0.0, X_MAX, n)
    v = observed_squeezed(xs, **args)
    i = int(np.argmin(v))
    return xs[i], 10 * math.log10(v[i])


def _random_configs(n, seed=11):
    rng = np.random.Generator(np.random.Philox(key=seed))
    for _ in range(n):
        loss = float(rng.uniform(0.0, 0.02))
        params = OpoParams(float(rng.uniform(0.05, 0.2)), float(rng.uniform(0.2, 1.0)),
                           loss if rng.random() < 0.5 else REF_LINE)
        chain = DetectionChain(float(rng.uniform(0.9, 1.0)), float(rng.uniform(0.95, 1.0)),
                               float(rng.uniform(0.9, 1.0)), math.radians(float(rng.uniform(0.3, 6.0))),
                               CircuitNoiseFloor(float(rng.uniform(-30.0, -15.0))),
                               float(rng.uniform(0.0, 5e6)), "angular")
        yield params, chain


@pytest.mark.parametrize("params,chain", list(_random_configs(16)))
def test_golden_section_matches_brute_force(params, chain):
    rep = find_x_opt(params, chain)
    x_b, level_b = _brute(params, chain)
    if rep.boundary:
        # large Omega keeps R_- finite at x -> 1, so the minimum can sit on the edge
        assert x_b == pytest.approx(X_MAX, abs=1e-4)
    else:
        assert rep.x_opt == pytest.approx(x_b, abs=1e-4)
    assert rep.best_squeezed_db == pytest.approx(level_b, abs=1e-3)
    assert rep.best_squeezed_db <= level_b + 1e-9


def test_coarse_resolution_does_not_change_answer(ref_params, ref_chain):
    a = find_x_opt(ref_params, ref_chain, coarse_points=65)
    b = find_x_opt(ref_params, ref_chain, coarse_points=257)
    assert a.x_opt == pytest.approx(b.x_opt, abs=1e-5)
    assert a.best_squeezed_db == pytest.approx(b.best_squeezed_db, abs=1e-9)
    assert b.evaluations > a.evaluations


def test_pre_floor_objective(ref_params, ref_chain):
    observed = find_x_opt(ref_params, ref_chain)
    pre = find_x_opt(ref_params, ref_chain, apply_floor=False)
    assert pre.best_squeezed_db < observed.best_squeezed_db
    # the floor is a monotone map, so the argmin is unchanged
    assert pre.x_opt == pytest.approx(observed.x_opt, abs=1e-5)


def test_reference_curve_worsens_past_optimum(ref_params, ref_chain):
    rep = find_x_opt(ref_params, ref_chain)
    xs = np.linspace(rep.x_opt, 0.999, 200)
    levels = [predict_observed(ref_params, ref_chain, float(x)).db[0] for x in xs]
    assert np.all(np.diff(levels) > 0)


def test_boundary_optimum(lossless_params):
    rep = find_x_opt(lossless_params, ideal_chain(0.0))
    assert rep.boundary
    assert rep.x_opt is None
    assert rep.bracket[1] == X_MAX
    expected = generated_pair(lossless_params, ideal_chain(0.0), X_MAX).db[0]
    assert rep.best_squeezed_db == pytest.approx(expected, abs=1e-9)


def test_coarse_points_validated(ref_params, ref_chain):
    with pytest.raises(InvalidArgumentError):
        find_x_opt(ref_params, ref_chain, coarse_points=2)


def test_sweep_pump_matches_forward_model_exactly(ref_params, ref_chain):
    xs = np.linspace(0.0, 0.95, 40)
    table = sweep_pump(ref_params, ref_chain, xs)
    assert table.shape == (40,)
    assert table.header == ["x", "squeezed_db", "antisqueezed_db",
                            "generated_squeezed_db", "generated_antisqueezed_db"]
    for row in table.rows():
        x = float(row[0])
        assert row[1:3] == predict_observed(ref_params, ref_chain, x).db
        assert row[3:5] == generated_pair(ref_params, ref_chain, x).db
    assert table.metadata["kernel_backend"] in ("numba", "numpy")


def test_sweep_pump_rejects_threshold(ref_params, ref_chain):
    with pytest.raises(AboveThresholdError):
        sweep_pump(ref_params, ref_chain, [0.5, 1.0])


def test_axis_validation():
    with pytest.raises(InvalidArgumentError):
        Axis("x", "1", [0.1, 0.1])
    with pytest.raises(InvalidArgumentError):
        Axis("x", "1", [])


def test_sweep_table_rejects_nonfinite():
    with pytest.raises(InvalidArgumentError):
        SweepTable([Axis("x", "1", [0.0, 1.0])], {"v": np.array([0.0, np.nan])})


def test_surface_shape_and_monotonic(ref_params, ref_chain):
    thetas = np.linspace(0.0, 5.0, 11)
    losses = np.linspace(0.0, 0.01, 9)
    table = sweep_surface(ref_params, ref_chain, thetas, losses)
    best = table.columns["best_squeezed_db"]
    assert table.shape == (11, 9)
    # more jitter or more loss never helps
    assert np.all(np.diff(best, axis=0) >= -1e-9)
    assert np.all(np.diff(best, axis=1) >= -1e-9)
    assert np.all(table.columns["boundary"][1:] == 0)
    assert len(list(table.rows())) == 99


def test_surface_cell_matches_find_x_opt(ref_params, ref_chain):
    table = sweep_surface(ref_params, ref_chain, [1.5, 3.0], [0.0038])
    single = find_x_opt(OpoParams(0.123, 0.5, 0.0038), ref_chain)
    assert table.columns["best_squeezed_db"][0, 0] == pytest.approx(single.best_squeezed_db, abs=1e-12)
    assert table.columns["x_opt"][0, 0] == pytest.approx(single.x_opt, abs=1e-12)


def test_surface_anchors(ref_params, ref_chain):
    table = sweep_surface(ref_params, ref_chain, [0.0, 1.5], [0.0038], "follow_line")
    assert table.columns["best_squeezed_db"][1, 0] < -9.0
    path = table.path
    assert path is not None
    assert path.columns["best_squeezed_db"][0] < -10.0
    x = path.columns["x_opt"]
    assert np.allclose(path.columns["loss"], REF_LINE.intercept + REF_LINE.slope * x)


def test_follow_line_needs_loss_line(measured_params, ref_chain):
    with pytest.raises(InvalidModelError):
        sweep_surface(measured_params, ref_chain, [1.5], [0.0038], "follow_line")


def test_surface_axis_domain(ref_params, ref_chain):
    with pytest.raises(DomainError):
        sweep_surface(ref_params, ref_chain, [45.0], [0.0])
    with pytest.raises(DomainError):
        sweep_surface(ref_params, ref_chain, [1.0], [1.0])


def test_kernel_surface_is_cellwise(ref_params, ref_chain):
    args = kernel_args(ref_params, ref_chain)
    for k in ("theta", "loss0", "loss1"):
        args.pop(k)
    th = np.radians([1.0, 2.0, 3.0])
    one = kernels.optimize_cells(th, np.full(3, 0.004), np.zeros(3), n_coarse=65, x_max=X_MAX, tol=1e-6, **args)
    for i in range(3):
        single = kernels.optimize_cells(th[i:i + 1], np.array([0.004]), np.zeros(1),
                                        n_coarse=65, x_max=X_MAX, tol=1e-6, **args)
        assert single[0][0] == one[0][i]
        assert single[1][0] == one[1][i]
