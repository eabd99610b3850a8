"""Optimal pump power under phase jitter, and sweeps over pump, jitter and loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from ._accel import BACKEND, kernels
from .errors import DomainError, InvalidArgumentError, InvalidModelError
from .opomodel import (
    DetectionChain,
    LossLine,
    OpoParams,
    generated_pair,
    kernel_args,
    predict_observed,
)
from .quadmath import linear_to_db

X_MAX = 1.0 - 1e-6
COARSE_POINTS = 65
X_TOL = 1e-6


@dataclass(frozen=True)
class OptimumReport:
    """Result of :func:`find_x_opt`.

    When the best squeezing is only approached as ``x -> 1`` the optimum is
    a boundary optimum: ``boundary`` is true, ``x_opt`` is ``None`` and
    ``best_squeezed_db`` is the level at ``x = 1 - 1e-6``.
    """

    x_opt: float | None
    best_squeezed_db: float
    bracket: tuple[float, float]
    evaluations: int
    boundary: bool = False


@dataclass(frozen=True)
class Axis:
    name: str
    unit: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise InvalidArgumentError(f"axis {self.name!r} must be a non-empty 1-D sequence")
        if v.size > 1 and not np.all(np.diff(v) > 0):
            raise InvalidArgumentError(f"axis {self.name!r} must be strictly increasing")
        object.__setattr__(self, "values", v)


@dataclass
class SweepTable:
    """Rectangular grid of predicted levels.

    ``columns`` maps a column name to an array shaped like the grid (one
    dimension per axis, in axis order). ``path`` holds an extra
    one-dimensional table for surfaces computed in ``follow_line`` mode.
    """

    axes: list[Axis]
    columns: dict[str, np.ndarray]
    metadata: dict[str, str] = field(default_factory=dict)
    path: SweepTable | None = None

    def __post_init__(self):
        shape = self.shape
        for name, col in self.columns.items():
            col = np.asarray(col)
            if col.shape != shape:
                raise InvalidArgumentError(f"column {name!r} has shape {col.shape}, expected {shape}")
            if col.dtype.kind == "f" and not np.all(np.isfinite(col)):
                raise InvalidArgumentError(f"column {name!r} contains non-finite cells")
            self.columns[name] = col

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.values.size for a in self.axes)

    def rows(self):
        """Yield ``(axis values..., column values...)`` in C order of the axes."""
        grids = np.meshgrid(*[a.values for a in self.axes], indexing="ij")
        flat_axes = [g.ravel() for g in grids]
        flat_cols = [c.ravel() for c in self.columns.values()]
        for i in range(flat_axes[0].size):
            yield tuple(a[i] for a in flat_axes) + tuple(c[i] for c in flat_cols)

    @property
    def header(self) -> list[str]:
        return [a.name for a in self.axes] + list(self.columns)


class LossMode(str, Enum):
    FIXED = "fixed"
    FOLLOW_LINE = "follow_line"


def _report(x_opt, best, lo, hi, boundary, evals) -> OptimumReport:
    return OptimumReport(
        x_opt=None if boundary else float(x_opt),
        best_squeezed_db=linear_to_db(best),
        bracket=(float(lo), float(hi)),
        evaluations=int(evals),
        boundary=bool(boundary),
    )


def find_x_opt(params: OpoParams, chain: DetectionChain, *, apply_floor: bool = True,
               coarse_points: int = COARSE_POINTS, tol: float = X_TOL) -> OptimumReport:
    """Normalized pump power giving the lowest observed squeezed level.

    A uniform scan of ``coarse_points`` samples on ``[0, 1 - 1e-6]`` picks
    the bracket around the best sample; golden-section search then shrinks
    it below ``tol``. ``apply_floor=False`` optimizes the level before the
    circuit-noise floor is added.
    """
    if coarse_points < 3:
        raise InvalidArgumentError("coarse scan needs at least 3 points")
    args = kernel_args(params, chain, apply_floor=apply_floor)
    theta = np.array([args.pop("theta")])
    loss0 = np.array([args.pop("loss0")])
    loss1 = np.array([args.pop("loss1")])
    out = kernels.optimize_cells(theta, loss0, loss1, n_coarse=coarse_points, x_max=X_MAX, tol=tol, **args)
    return _report(*(a[0] for a in out))


def _metadata(params: OpoParams, chain: DetectionChain, **extra) -> dict[str, str]:
    loss = params.loss
    meta = {
        "transmittance": repr(params.transmittance),
        "round_trip_length_m": repr(params.round_trip_length),
    }
    if isinstance(loss, LossLine):
        meta["loss_intercept"] = repr(loss.intercept)
        meta["loss_slope"] = repr(loss.slope)
    else:
        meta["loss_fixed"] = repr(loss)
    if params.threshold is not None:
        meta["threshold_mw"] = repr(params.threshold * 1e3)
    meta.update(
        eta=repr(chain.eta),
        xi=repr(chain.xi),
        zeta=repr(chain.zeta),
        circuit_noise_db=repr(chain.circuit_floor.level_db),
        phase_rms_deg=repr(chain.phase_rms_deg),
        measurement_freq_hz=repr(chain.measurement_freq),
        freq_convention=chain.freq_convention.value,
        kernel_backend=BACKEND,
    )
    meta.update({k: str(v) for k, v in extra.items()})
    return meta


def sweep_pump(params: OpoParams, chain: DetectionChain, x_values) -> SweepTable:
    """Observed and generated levels at each normalized pump power."""
    axis = Axis("x", "1", x_values)
    cols = {k: np.empty(axis.values.size) for k in
            ("squeezed_db", "antisqueezed_db", "generated_squeezed_db", "generated_antisqueezed_db")}
    for i, x in enumerate(axis.values):
        obs = predict_observed(params, chain, float(x))
        gen = generated_pair(params, chain, float(x))
        cols["squeezed_db"][i], cols["antisqueezed_db"][i] = obs.db
        cols["generated_squeezed_db"][i], cols["generated_antisqueezed_db"][i] = gen.db
    return SweepTable([axis], cols, _metadata(params, chain))


def sweep_surface(params_template: OpoParams, chain_template: DetectionChain,
                  theta_axis_deg, loss_axis, loss_mode: LossMode | str = LossMode.FIXED,
                  *, apply_floor: bool = True) -> SweepTable:
    """Best observed squeezing over a (phase jitter, fixed loss) grid.

    Each cell holds the level at that cell's own optimal pump power, found
    as in :func:`find_x_opt`. In ``follow_line`` mode the template's
    :class:`LossLine` is also followed: for every jitter value the pump is
    optimized with ``L = L(x)``, and the resulting ``(theta, L(x_opt))``
    curve is returned as ``table.path``.
    """
    loss_mode = LossMode(loss_mode)
    theta_ax = Axis("phase_rms_deg", "deg", theta_axis_deg)
    loss_ax = Axis("loss", "1", loss_axis)
    if np.any(theta_ax.values < 0.0) or np.any(theta_ax.values >= 45.0):
        raise DomainError("phase jitter axis must lie in [0, 45) degrees")
    if np.any(loss_ax.values < 0.0) or np.any(loss_ax.values >= 1.0):
        raise DomainError("loss axis must lie in [0, 1)")
    # validates the template itself
    replace(chain_template, theta_rms=math.radians(theta_ax.values[-1]))

    args = kernel_args(params_template, chain_template, apply_floor=apply_floor)
    for k in ("theta", "loss0", "loss1"):
        args.pop(k)
    th, ll = np.meshgrid(np.radians(theta_ax.values), loss_ax.values, indexing="ij")
    x_opt, best, _, _, boundary, _ = kernels.optimize_cells(
        th.ravel(), ll.ravel(), np.zeros(th.size),
        n_coarse=COARSE_POINTS, x_max=X_MAX, tol=X_TOL, **args,
    )
    shape = th.shape
    table = SweepTable(
        [theta_ax, loss_ax],
        {
            "best_squeezed_db": 10.0 * np.log10(best).reshape(shape),
            "x_opt": x_opt.reshape(shape),
            "boundary": boundary.reshape(shape).astype(np.int64),
        },
        _metadata(params_template, chain_template, loss_mode=loss_mode.value,
                  objective="observed" if apply_floor else "pre_floor"),
    )

    if loss_mode is LossMode.FOLLOW_LINE:
        line = params_template.loss
        if not isinstance(line, LossLine):
            raise InvalidModelError("follow_line mode needs a loss line in the cavity parameters")
        n = theta_ax.values.size
        px, pbest, _, _, pbound, _ = kernels.optimize_cells(
            np.radians(theta_ax.values), np.full(n, line.intercept), np.full(n, line.slope),
            n_coarse=COARSE_POINTS, x_max=X_MAX, tol=X_TOL, **args,
        )
        table.path = SweepTable(
            [Axis("phase_rms_deg", "deg", theta_ax.values)],
            {
                "loss": line.intercept + line.slope * px,
                "best_squeezed_db": 10.0 * np.log10(pbest),
                "x_opt": px,
                "boundary": pbound.astype(np.int64),
            },
            dict(table.metadata),
        )
    return table
