import math

import pytest

from sqzbudget import (
    CircuitNoiseFloor,
    DetectionChain,
    LossLine,
    OpoParams,
    reference_config,
)

REF_LINE = LossLine(0.00249, 0.00222)
X_100MW = math.sqrt(100.0 / 180.0)


@pytest.fixture
def ref_params():
    """Cavity with the pump-dependent loss line and 180 mW threshold."""
    return reference_config().opo_params()


@pytest.fixture
def ref_chain():
    return reference_config().detection_chain()


@pytest.fixture
def measured_params():
    """Cavity with the single loss value measured under 100 mW pumping."""
    return OpoParams(0.123, 0.5, 0.0038, 0.180)


@pytest.fixture
def lossless_params():
    return OpoParams(0.123, 0.5, 0.0)


def ideal_chain(phase_deg, freq=0.0, convention="angular"):
    return DetectionChain(1.0, 1.0, 1.0, math.radians(phase_deg), CircuitNoiseFloor(-math.inf),
                          freq, convention)
