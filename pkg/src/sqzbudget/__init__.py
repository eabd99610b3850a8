"""Loss and phase-noise budget for cw squeezed light from a subthreshold OPO."""

from ._accel import BACKEND
from .config import ExperimentConfig, load_config, parse_config, reference_config
from .estimate import (
    FitResult,
    GainPoint,
    LossPoint,
    Side,
    estimate_total_efficiency,
    fit_loss_line,
    fit_threshold,
    invert_phase_mix,
    resample_uncertainty,
)
from .montecarlo import JitterSpec, approximation_gap, mc_mixed_pair
from .opomodel import (
    DetectionChain,
    FrequencyConvention,
    LossLine,
    OpoParams,
    QuadraturePair,
    escape_efficiency,
    generated_pair,
    intracavity_loss,
    normalized_frequency,
    phase_mix,
    predict_observed,
    pump_power_to_x,
)
from .optimize import OptimumReport, SweepTable, find_x_opt, sweep_pump, sweep_surface
from .quadmath import (
    CircuitNoiseFloor,
    NoiseLevel,
    add_circuit_noise,
    db_to_linear,
    linear_to_db,
    subtract_circuit_noise,
)

__version__ = "0.1.0"
