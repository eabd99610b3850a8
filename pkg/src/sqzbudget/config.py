"""Experiment configuration files and measurement tables.

Configuration is flat ``key = value`` text with ``#`` comments. Values are
in the units the lab quotes: mW, m, Hz, degrees, dB. Tables are
comma-separated with a mandatory header and optional ``#`` comment lines.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .errors import ConfigError, SqueezingError
from .estimate import GainPoint, LossPoint, threshold_from_gain
from .opomodel import DetectionChain, FrequencyConvention, LossLine, OpoParams
from .quadmath import CircuitNoiseFloor, NoiseLevel

_FLOAT_KEYS = (
    "transmittance", "round_trip_length_m", "loss_fixed", "loss_intercept", "loss_slope",
    "threshold_mw", "eta", "xi", "zeta", "circuit_noise_db", "phase_rms_deg", "measurement_freq_hz",
)
_REQUIRED = ("transmittance", "round_trip_length_m", "eta", "xi", "zeta", "measurement_freq_hz")


@dataclass(frozen=True)
class ExperimentConfig:
    transmittance: float
    round_trip_length_m: float
    eta: float
    xi: float
    zeta: float
    measurement_freq_hz: float
    loss_fixed: float | None = None
    loss_intercept: float | None = None
    loss_slope: float | None = None
    threshold_mw: float | None = None
    gain_at_power: tuple[float, float] | None = None  # (gain, power_mw)
    circuit_noise_db: float = -math.inf
    phase_rms_deg: float = 0.0
    freq_convention: FrequencyConvention = FrequencyConvention.ANGULAR

    def __post_init__(self):
        line = self.loss_intercept is not None or self.loss_slope is not None
        if line and (self.loss_intercept is None or self.loss_slope is None):
            raise ConfigError("loss line needs both loss_intercept and loss_slope", key="loss_slope"
                              if self.loss_slope is None else "loss_intercept")
        if line == (self.loss_fixed is not None):
            raise ConfigError("give exactly one of loss_fixed or loss_intercept+loss_slope", key="loss_fixed")
        if self.threshold_mw is not None and self.gain_at_power is not None:
            raise ConfigError("give at most one of threshold_mw or gain_at_power", key="threshold_mw")
        object.__setattr__(self, "freq_convention", FrequencyConvention(self.freq_convention))
        # surface model violations here, keyed by field
        self.opo_params()
        self.detection_chain()

    def opo_params(self) -> OpoParams:
        loss = LossLine(self.loss_intercept, self.loss_slope) if self.loss_fixed is None else self.loss_fixed
        key = "loss_fixed" if self.loss_fixed is not None else "loss_intercept"
        try:
            return OpoParams(self.transmittance, self.round_trip_length_m, loss, self.threshold_w)
        except SqueezingError as exc:
            raise ConfigError(str(exc), key=_guess_key(str(exc), key)) from exc

    @property
    def threshold_w(self) -> float | None:
        if self.threshold_mw is not None:
            return self.threshold_mw * 1e-3
        if self.gain_at_power is not None:
            gain, power = self.gain_at_power
            try:
                return threshold_from_gain(power, gain) * 1e-3
            except SqueezingError as exc:
                raise ConfigError(str(exc), key="gain_at_power") from exc
        return None

    def detection_chain(self, convention: FrequencyConvention | str | None = None) -> DetectionChain:
        try:
            return DetectionChain(
                eta=self.eta,
                xi=self.xi,
                zeta=self.zeta,
                theta_rms=math.radians(self.phase_rms_deg),
                circuit_floor=CircuitNoiseFloor(self.circuit_noise_db),
                measurement_freq=self.measurement_freq_hz,
                freq_convention=FrequencyConvention(convention or self.freq_convention),
            )
        except SqueezingError as exc:
            raise ConfigError(str(exc), key=_guess_key(str(exc), "phase_rms_deg")) from exc

    def dumps(self) -> str:
        """Serialize; :func:`parse_config` of the result gives back an equal record."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "gain_at_power":
                lines.append(f"gain_at_power = {v[0]!r} @ {v[1]!r}")
            elif f.name == "freq_convention":
                lines.append(f"freq_convention = {v.value}")
            else:
                lines.append(f"{f.name} = {v!r}")
        return "\n".join(lines) + "\n"


_MESSAGE_KEYS = (
    ("transmittance", "transmittance"), ("round-trip", "round_trip_length_m"),
    ("fixed loss", "loss_fixed"), ("loss line", "loss_intercept"), ("threshold", "threshold_mw"),
    ("eta ", "eta"), ("xi ", "xi"), ("zeta ", "zeta"), ("phase jitter", "phase_rms_deg"),
    ("circuit noise", "circuit_noise_db"), ("measurement frequency", "measurement_freq_hz"),
)


def _guess_key(message: str, default: str) -> str:
    """Map a model validation message back to the config key it concerns."""
    for prefix, key in _MESSAGE_KEYS:
        if message.startswith(prefix):
            return key
    return default


def _parse_float(text: str, key: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}", key=key, line=line) from None
    if math.isnan(v) or (math.isinf(v) and key != "circuit_noise_db"):
        raise ConfigError(f"value must be finite, got {text!r}", key=key, line=line)
    return v


def parse_config(text: str) -> ExperimentConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if key in values:
            raise ConfigError("duplicate key", key=key, line=lineno)
        if key in _FLOAT_KEYS:
            values[key] = _parse_float(value, key, lineno)
        elif key == "gain_at_power":
            parts = value.split("@")
            if len(parts) != 2:
                raise ConfigError("expected '<gain> @ <power_mw>'", key=key, line=lineno)
            values[key] = (_parse_float(parts[0].strip(), key, lineno), _parse_float(parts[1].strip(), key, lineno))
        elif key == "freq_convention":
            try:
                values[key] = FrequencyConvention(value)
            except ValueError:
                raise ConfigError(f"must be 'angular' or 'cyclic', got {value!r}", key=key, line=lineno) from None
        else:
            raise ConfigError("unknown key", key=key, line=lineno)
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError("missing required key", key=key)
    return ExperimentConfig(**values)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def reference_config() -> ExperimentConfig:
    """The bundled 860 nm PPKTP configuration (pump-dependent loss line, 180 mW threshold)."""
    text = resources.files("sqzbudget").joinpath("data/reference.conf").read_text(encoding="utf-8")
    return parse_config(text)


# ---------------------------------------------------------------------------
# measurement tables


def _read_table(text: str, columns: tuple[str, ...], optional: tuple[str, ...] = ()) -> list[dict]:
    lines = [(i, raw) for i, raw in enumerate(text.splitlines(), start=1)
             if raw.strip() and not raw.lstrip().startswith("#")]
    if not lines:
        raise ConfigError("table has no header", line=1)
    hline, header = lines[0]
    names = [h.strip() for h in next(csv.reader([header]))]
    allowed = set(columns) | set(optional)
    if not set(columns) <= set(names) or not set(names) <= allowed:
        raise ConfigError(
            f"expected header with columns {', '.join(columns)}"
            + (f" (optional: {', '.join(optional)})" if optional else "") + f", got {header.strip()!r}",
            line=hline,
        )
    rows = []
    for lineno, raw in lines[1:]:
        cells = [c.strip() for c in next(csv.reader([raw]))]
        if len(cells) != len(names):
            raise ConfigError(f"expected {len(names)} cells, got {len(cells)}", line=lineno)
        row = {"_line": lineno}
        for name, cell in zip(names, cells):
            if name == "quadrature":
                row[name] = cell
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ConfigError(f"not a number: {cell!r}", key=name, line=lineno) from None
            if not math.isfinite(v):
                raise ConfigError("cell must be finite", key=name, line=lineno)
            row[name] = v
        rows.append(row)
    if not rows:
        raise ConfigError("table has no data rows", line=hline)
    return rows


def _build(rows, make):
    out = []
    for row in rows:
        try:
            out.append(make(row))
        except SqueezingError as exc:
            raise ConfigError(str(exc), line=row["_line"]) from exc
    return out


def parse_gain_table(text: str) -> list[GainPoint]:
    """Rows of ``power_mw, gain[, sigma_gain]``; powers stay in mW."""
    rows = _read_table(text, ("power_mw", "gain"), ("sigma_gain",))
    return _build(rows, lambda r: GainPoint(r["power_mw"], r["gain"], r.get("sigma_gain")))


def parse_loss_table(text: str) -> list[LossPoint]:
    rows = _read_table(text, ("x", "loss"))
    return _build(rows, lambda r: LossPoint(r["x"], r["loss"]))


def parse_level_table(text: str) -> dict[str, NoiseLevel]:
    """Rows of ``quadrature, level_db, sigma_db`` with quadrature ``squeezed``/``antisqueezed``."""
    rows = _read_table(text, ("quadrature", "level_db"), ("sigma_db",))
    out: dict[str, NoiseLevel] = {}
    for row in rows:
        q = row["quadrature"]
        if q not in ("squeezed", "antisqueezed"):
            raise ConfigError(f"quadrature must be 'squeezed' or 'antisqueezed', got {q!r}",
                              key="quadrature", line=row["_line"])
        if q in out:
            raise ConfigError("duplicate quadrature", key="quadrature", line=row["_line"])
        out[q] = _build([row], lambda r: NoiseLevel.from_db(r["level_db"], r.get("sigma_db")))[0]
    missing = {"squeezed", "antisqueezed"} - set(out)
    if missing:
        raise ConfigError(f"missing quadrature row(s): {', '.join(sorted(missing))}", key="quadrature")
    return out


def format_table(header: list[str], rows, comments: list[str] = (), fmt=None) -> str:
    """Comment block, header and rows as comma-separated text with ``\\n`` newlines.

    ``fmt(column_name, value)`` renders one cell; the default is ``repr``.
    """
    fmt = fmt or (lambda _name, v: repr(v))
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(name, v) for name, v in zip(header, row)) + "\n")
    return buf.getvalue()
