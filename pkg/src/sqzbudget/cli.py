"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 domain or model error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import BACKEND
from .config import (
    ExperimentConfig,
    format_table,
    parse_config,
    parse_gain_table,
    parse_level_table,
    parse_loss_table,
)
from .errors import ConfigError, SqueezingError
from .estimate import (
    Side,
    estimate_total_efficiency,
    fit_loss_line,
    fit_threshold,
    invert_phase_mix,
    resample_uncertainty,
)
from .montecarlo import (
    RNG_ALGORITHM,
    Distribution,
    JitterSpec,
    approximation_gap,
    expected_mixed_pair,
    mc_mixed_pair,
)
from .opomodel import (
    QuadraturePair,
    decay_rate,
    escape_efficiency,
    gain_to_x,
    generated_pair,
    normalized_frequency,
    phase_mix,
    predict_observed,
    pump_power_to_x,
    total_efficiency,
)
from .optimize import find_x_opt, sweep_pump, sweep_surface
from .quadmath import NoiseLevel, subtract_circuit_noise

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _IOFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# formatting


def _formatter(precision):
    def fmt(name, v):
        if isinstance(v, str):
            return v
        if isinstance(v, (bool, np.bool_)) or (isinstance(v, (int, np.integer))):
            return str(int(v))
        v = float(v)
        if name.endswith("_db") and precision is not None:
            return f"{v:.{precision}f}"
        return repr(v)
    return fmt


def _db(v, precision):
    return repr(float(v)) if precision is None else f"{v:+.{precision}f}"


def _pair_text(pair: QuadraturePair, precision) -> str:
    sq, asq = pair.db
    text = f"{_db(sq, precision)} / {_db(asq, precision)} dB"
    text += f"   (linear {pair.squeezed.value:.6g} / {pair.antisqueezed.value:.6g})"
    return text


def _comments(args, cfg: ExperimentConfig | None, **extra) -> list[str]:
    lines = [f"sqzbudget {__version__} {args.command}"]
    if cfg is not None:
        lines.append(f"convention = {_convention(args, cfg).value}")
        lines += ["config: " + ln for ln in cfg.dumps().splitlines()]
    lines.append(f"kernel_backend = {BACKEND}")
    lines += [f"{k} = {v}" for k, v in extra.items()]
    return lines


def _write(path: str | None, text: str, stdout) -> None:
    if path is None:
        stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def _table_text(args, cfg, header, rows, **extra) -> str:
    return format_table(header, rows, _comments(args, cfg, **extra), _formatter(args.precision))


# ---------------------------------------------------------------------------
# config helpers


def _config(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise _IOFailure(f"cannot read {args.config}: {exc.strerror or exc}") from exc
    return parse_config(text)


def _convention(args, cfg):
    return cfg.detection_chain(args.convention).freq_convention


def _threshold_mw(args, cfg) -> float:
    table = getattr(args, "gain_table", None)
    if table:
        return fit_threshold(parse_gain_table(_read(table))).estimate
    th = cfg.threshold_w
    if th is None:
        raise ConfigError("threshold needed: set threshold_mw or gain_at_power, or pass --gain-table",
                          key="threshold_mw")
    return th * 1e3


def _resolve_x(args, cfg) -> tuple[float, dict]:
    info = {}
    if args.x is not None:
        x = args.x
    elif args.power is not None:
        p_th = _threshold_mw(args, cfg)
        x = pump_power_to_x(args.power, p_th)
        info = {"pump_power_mw": args.power, "threshold_mw": p_th}
    elif getattr(args, "gain", None) is not None:
        x = gain_to_x(args.gain)
        info = {"gain": args.gain}
    else:
        raise ConfigError("give the pump as --power <mW> or --x <normalized>")
    return x, info


# ---------------------------------------------------------------------------
# commands


def cmd_predict(args, out):
    cfg = _config(args)
    params = cfg.opo_params()
    chain = cfg.detection_chain(args.convention)
    x, info = _resolve_x(args, cfg)
    gen = generated_pair(params, chain, x)
    mixed = phase_mix(gen, chain.theta_rms)
    obs = predict_observed(params, chain, x)
    values = {
        "x": x,
        "loss": params.loss_at(x),
        "rho": escape_efficiency(params, x),
        "gamma_per_s": decay_rate(params, x),
        "omega": normalized_frequency(params, chain, x),
        "total_efficiency": total_efficiency(params, chain, x),
    }
    p = args.precision
    lines = [f"{k:<20s}{v!r}" for k, v in {**info, **values}.items()]
    lines += [
        f"{'generated':<20s}{_pair_text(gen, p)}",
        f"{'jitter-mixed':<20s}{_pair_text(mixed, p)}",
        f"{'observed':<20s}{_pair_text(obs, p)}",
        "",
    ]
    header = list(info) + list(values) + [
        "generated_squeezed_db", "generated_antisqueezed_db",
        "mixed_squeezed_db", "mixed_antisqueezed_db",
        "squeezed_db", "antisqueezed_db",
        "squeezed_linear", "antisqueezed_linear",
    ]
    row = list(info.values()) + list(values.values()) + [
        *gen.db, *mixed.db, *obs.db, *obs.linear,
    ]
    table = _table_text(args, cfg, header, [row])
    out.write("\n".join(lines))
    if args.out is None:
        out.write("\n")
    _write(args.out, table, out)


def cmd_fit_threshold(args, out):
    points = parse_gain_table(_read(args.table))
    res = fit_threshold(points)
    p_th = res.estimate
    sigma = "absent" if res.n_points == 1 else repr(res.sigma)
    out.write(f"threshold_mw        {p_th!r}\nsigma_mw            {sigma}\n"
              f"rms_residual        {res.residual_norm!r}\nn_points            {res.n_points}\n\n")
    rows = []
    for pt, r in zip(points, res.residuals):
        rows.append([pt.power, pt.gain, pt.gain - r, r])
    table = _table_text(args, None, ["power_mw", "gain", "fitted_gain", "residual"], rows,
                        threshold_mw=repr(p_th), sigma_mw=sigma)
    _write(args.out, table, out)


def cmd_fit_loss(args, out):
    points = parse_loss_table(_read(args.table))
    fit = fit_loss_line(points)
    out.write(f"loss_intercept      {fit.intercept!r} +- {fit.intercept_sigma!r}\n"
              f"loss_slope          {fit.slope!r} +- {fit.slope_sigma!r}\n"
              f"rms_residual        {fit.residual_norm!r}\nn_points            {fit.n_points}\n\n")
    rows = [[pt.x, pt.loss, pt.loss - r, r] for pt, r in zip(points, fit.residuals)]
    table = _table_text(args, None, ["x", "loss", "fitted_loss", "residual"], rows,
                        loss_intercept=repr(fit.intercept), loss_slope=repr(fit.slope))
    _write(args.out, table, out)


def _observed_pair(args) -> QuadraturePair:
    if args.levels:
        levels = parse_level_table(_read(args.levels))
        return QuadraturePair(levels["squeezed"], levels["antisqueezed"])
    if args.squeezed_db is None or args.antisqueezed_db is None:
        raise ConfigError("give --squeezed-db and --antisqueezed-db, or --levels <table>")
    return QuadraturePair(NoiseLevel.from_db(args.squeezed_db, args.squeezed_sigma_db),
                          NoiseLevel.from_db(args.antisqueezed_db, args.antisqueezed_sigma_db))


def cmd_correct(args, out):
    cfg = _config(args)
    params = cfg.opo_params()
    chain = cfg.detection_chain(args.convention)
    observed = _observed_pair(args)
    x, info = _resolve_x(args, cfg)
    omega = normalized_frequency(params, chain, x)
    floor = chain.circuit_floor
    corrected = QuadraturePair(subtract_circuit_noise(observed.squeezed, floor),
                               subtract_circuit_noise(observed.antisqueezed, floor))
    gen = invert_phase_mix(corrected, chain.theta_rms)
    losses = {}
    for side in Side:
        try:
            losses[side.value] = 1.0 - estimate_total_efficiency(gen, x, omega, side).estimate
        except SqueezingError as exc:
            losses[side.value] = f"error: {exc}"
    product = 1.0 - total_efficiency(params, chain, x)

    p = args.precision
    values = {**info, "x": x, "omega": omega}
    lines = [f"{k:<34s}{v!r}" for k, v in values.items()]
    lines += [
        f"{'observed':<34s}{_pair_text(observed, p)}",
        f"{'circuit-noise corrected':<34s}{_pair_text(corrected, p)}",
        f"{'generated':<34s}{_pair_text(gen, p)}",
    ]
    lines += [f"{'total loss (' + k + ')':<34s}{v!r}" if not isinstance(v, str) else
              f"{'total loss (' + k + ')':<34s}{v}" for k, v in losses.items()]
    lines.append(f"{'total loss (1-rho*zeta*xi^2*eta)':<34s}{product!r}")

    resampled = None
    sq_sig, asq_sig = observed.squeezed.sigma_db, observed.antisqueezed.sigma_db
    if sq_sig is not None or asq_sig is not None:
        resampled = resample_uncertainty(
            {
                "squeezed_db": (observed.squeezed.db, sq_sig or 0.0),
                "antisqueezed_db": (observed.antisqueezed.db, asq_sig or 0.0),
                "theta_rms": chain.theta_rms,
                "floor_db": floor.level_db,
                "x": x,
                "omega": omega,
            },
            "correct_and_invert", n_samples=args.samples, seed=args.seed,
        )
        lines.append(f"resampled uncertainties ({args.samples} samples, seed {args.seed}):")
        for k, r in resampled.items():
            lines.append(f"  {k:<32s}{r.estimate!r} +- {r.sigma!r}")
    lines.append("")
    out.write("\n".join(lines))
    if args.out is None:
        out.write("\n")

    header = list(values) + [
        "observed_squeezed_db", "observed_antisqueezed_db",
        "corrected_squeezed_db", "corrected_antisqueezed_db",
        "generated_squeezed_db", "generated_antisqueezed_db",
        "total_loss_squeezed", "total_loss_antisqueezed", "total_loss_both", "total_loss_product",
    ]
    row = list(values.values()) + [*observed.db, *corrected.db, *gen.db,
                                   *[v if not isinstance(v, str) else "nan" for v in losses.values()], product]
    if resampled is not None:
        for k, r in resampled.items():
            header.append(f"sigma_{k}")
            row.append(r.sigma)
    _write(args.out, _table_text(args, cfg, header, [row], seed=args.seed, samples=args.samples), out)


def cmd_optimize(args, out):
    cfg = _config(args)
    params = cfg.opo_params()
    chain = cfg.detection_chain(args.convention)
    rep = find_x_opt(params, chain, apply_floor=not args.pre_floor)
    x_text = "boundary" if rep.boundary else repr(rep.x_opt)
    out.write(f"x_opt               {x_text}\nbest_squeezed_db    {_db(rep.best_squeezed_db, args.precision)}\n"
              f"bracket             [{rep.bracket[0]!r}, {rep.bracket[1]!r}]\n"
              f"evaluations         {rep.evaluations}\n\n")
    header = ["x_opt", "best_squeezed_db", "bracket_low", "bracket_high", "evaluations", "boundary"]
    row = [x_text, rep.best_squeezed_db, rep.bracket[0], rep.bracket[1], rep.evaluations, int(rep.boundary)]
    _write(args.out, _table_text(args, cfg, header, [row],
                                 objective="pre_floor" if args.pre_floor else "observed"), out)


def cmd_sweep(args, out):
    cfg = _config(args)
    params = cfg.opo_params()
    chain = cfg.detection_chain(args.convention)
    xs = np.linspace(args.x_min, args.x_max, args.x_steps)
    phases = args.phase_deg if args.phase_deg else [cfg.phase_rms_deg]
    rows = []
    header = None
    for ph in phases:
        table = sweep_pump(params, chain.with_phase_deg(ph), xs)
        header = ["phase_rms_deg"] + table.header
        rows += [[ph, *r] for r in table.rows()]
    _write(args.out, _table_text(args, cfg, header, rows), out)


def _path_out(args) -> str | None:
    if args.path_out:
        return args.path_out
    if args.out is None:
        return None
    p = Path(args.out)
    return str(p.with_name(p.stem + "_path" + p.suffix))


def cmd_surface(args, out):
    cfg = _config(args)
    params = cfg.opo_params()
    chain = cfg.detection_chain(args.convention)
    thetas = np.linspace(args.theta_min, args.theta_max, args.theta_steps)
    losses = np.linspace(args.loss_min, args.loss_max, args.loss_steps)
    table = sweep_surface(params, chain, thetas, losses, args.loss_mode, apply_floor=not args.pre_floor)
    extra = {"loss_mode": args.loss_mode, "objective": "pre_floor" if args.pre_floor else "observed"}
    _write(args.out, _table_text(args, cfg, table.header, table.rows(), **extra), out)
    if table.path is not None:
        _write(_path_out(args), _table_text(args, cfg, table.path.header, table.path.rows(),
                                            table="follow_line path", **extra), out)


def cmd_mc(args, out):
    cfg = _config(args)
    params = cfg.opo_params()
    chain = cfg.detection_chain(args.convention)
    if args.squeezed_db is not None or args.antisqueezed_db is not None:
        if args.squeezed_db is None or args.antisqueezed_db is None:
            raise ConfigError("give both --squeezed-db and --antisqueezed-db")
        gen = QuadraturePair.from_db(args.squeezed_db, args.antisqueezed_db)
        info = {}
    else:
        x, info = _resolve_x(args, cfg)
        gen = generated_pair(params, chain, x)
        info["x"] = x
    rms_deg = args.phase_deg if args.phase_deg is not None else cfg.phase_rms_deg
    rms = math.radians(rms_deg)
    spec = JitterSpec(args.distribution, rms, args.samples, args.seed)
    est = mc_mixed_pair(gen, spec)
    analytic = expected_mixed_pair(gen, rms, spec.distribution)
    literal = phase_mix(gen, rms)
    gap = approximation_gap(gen, rms, spec.distribution)
    ln10 = 10.0 / math.log(10.0)
    header = list(info) + [
        "distribution", "phase_rms_deg", "n_samples", "seed",
        "generated_squeezed_db", "generated_antisqueezed_db",
        "mc_squeezed", "mc_squeezed_stderr", "mc_antisqueezed", "mc_antisqueezed_stderr",
        "mc_squeezed_db", "mc_squeezed_stderr_db", "mc_antisqueezed_db",
        "analytic_squeezed_db", "analytic_antisqueezed_db",
        "literal_squeezed_db", "literal_antisqueezed_db", "gap_db",
    ]
    row = list(info.values()) + [
        spec.distribution.value, rms_deg, spec.n_samples, spec.seed,
        *gen.db,
        est.squeezed, est.squeezed_stderr, est.antisqueezed, est.antisqueezed_stderr,
        est.db[0], ln10 * est.squeezed_stderr / est.squeezed, est.db[1],
        *analytic.db, *literal.db, gap,
    ]
    _write(args.out, _table_text(args, cfg, header, [row], rng=RNG_ALGORITHM), out)


# ---------------------------------------------------------------------------
# parser


def _precision(text: str):
    if text == "full":
        return None
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a digit count or 'full'") from None
    if not 0 <= v <= 17:
        raise argparse.ArgumentTypeError("precision must lie in 0..17")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="experiment configuration file (key = value)")
    common.add_argument("--out", help="write the table here instead of stdout")
    common.add_argument("--convention", choices=["angular", "cyclic"],
                        help="override the configured frequency convention")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
    common.add_argument("--precision", type=_precision, default=3,
                        help="decimal places for dB values, or 'full' (default 3)")

    def pump(p, gain=False):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--power", type=float, help="pump power in mW")
        g.add_argument("--x", type=float, help="normalized pump power sqrt(P/P_th)")
        if gain:
            g.add_argument("--gain", type=float, help="parametric gain; x = 1 - 1/sqrt(G)")
        p.add_argument("--gain-table", help="fit the threshold from this gain table instead of the config")

    parser = _Parser(prog="sqzbudget", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("predict", parents=[common], help="forward prediction at one pump power")
    pump(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("fit-threshold", parents=[common], help="fit P_th from a power_mw,gain table")
    p.add_argument("table")
    p.set_defaults(func=cmd_fit_threshold)

    p = sub.add_parser("fit-loss", parents=[common], help="fit the loss line from an x,loss table")
    p.add_argument("table")
    p.set_defaults(func=cmd_fit_loss)

    p = sub.add_parser("correct", parents=[common],
                       help="observed levels -> floor-corrected -> generated levels and loss budget")
    pump(p, gain=True)
    p.add_argument("--squeezed-db", type=float)
    p.add_argument("--antisqueezed-db", type=float)
    p.add_argument("--squeezed-sigma-db", type=float)
    p.add_argument("--antisqueezed-sigma-db", type=float)
    p.add_argument("--levels", help="table with quadrature,level_db,sigma_db rows")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("optimize", parents=[common], help="optimal normalized pump power")
    p.add_argument("--pre-floor", action="store_true", help="optimize the level before circuit noise")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", parents=[common], help="levels versus normalized pump power")
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, default=0.95)
    p.add_argument("--x-steps", type=int, default=96)
    p.add_argument("--phase-deg", type=float, nargs="+", help="one curve per jitter value (degrees)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("surface", parents=[common], help="best squeezing over (jitter, loss)")
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=5.0)
    p.add_argument("--theta-steps", type=int, default=101)
    p.add_argument("--loss-min", type=float, default=0.0)
    p.add_argument("--loss-max", type=float, default=0.01)
    p.add_argument("--loss-steps", type=int, default=101)
    p.add_argument("--loss-mode", choices=["fixed", "follow_line"], default="fixed")
    p.add_argument("--path-out", help="file for the follow_line path (default: <out>_path.<ext>)")
    p.add_argument("--pre-floor", action="store_true")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo check of the jitter mixing")
    pump(p)
    p.add_argument("--squeezed-db", type=float, help="generated squeezed level (instead of the model)")
    p.add_argument("--antisqueezed-db", type=float)
    p.add_argument("--phase-deg", type=float, help="jitter rms in degrees (default: config)")
    p.add_argument("--distribution", choices=[d.value for d in Distribution], default="gaussian")
    p.set_defaults(func=cmd_mc)
    return parser


_DEFAULT_SAMPLES = {"correct": 10_000, "mc": 1_000_000}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.samples is None:
        args.samples = _DEFAULT_SAMPLES.get(args.command, 10_000)
    try:
        args.func(args, stdout)
    except ConfigError as exc:
        stderr.write(f"sqzbudget {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except _IOFailure as exc:
        stderr.write(f"sqzbudget {args.command}: error: {exc}\n")
        return EXIT_IO
    except SqueezingError as exc:
        stderr.write(f"sqzbudget {args.command}: error: {exc}\n")
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
