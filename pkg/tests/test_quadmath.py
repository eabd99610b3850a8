import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqzbudget import (
    CircuitNoiseFloor,
    NoiseLevel,
    add_circuit_noise,
    db_to_linear,
    linear_to_db,
    subtract_circuit_noise,
)
from sqzbudget.errors import DomainError, InvalidArgumentError, NonPhysicalMeasurementError

FLOOR = CircuitNoiseFloor(-21.7)


def test_db_to_linear_examples():
    assert db_to_linear(0.0) == 1.0
    # mpmath, 30 digits
    assert db_to_linear(-9.01) == pytest.approx(0.125602996369487, rel=1e-14)
    assert db_to_linear(15.12) == pytest.approx(32.5087297385434, rel=1e-14)


def test_linear_to_db_examples():
    assert linear_to_db(1.0) == 0.0
    assert linear_to_db(0.5) == pytest.approx(-3.01029995663981, abs=1e-13)
    assert linear_to_db(32.75) == pytest.approx(15.1521130432780, abs=1e-13)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_db_to_linear_rejects_non_finite(bad):
    with pytest.raises(InvalidArgumentError):
        db_to_linear(bad)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan])
def test_linear_to_db_rejects_non_positive(bad):
    with pytest.raises(DomainError):
        linear_to_db(bad)


def test_subtract_circuit_noise_reproduces_corrected_levels():
    sq = subtract_circuit_noise(NoiseLevel.from_db(-9.01), FLOOR)
    asq = subtract_circuit_noise(NoiseLevel.from_db(15.12), FLOOR)
    assert round(sq.db, 2) == -9.22
    assert round(asq.db, 2) == 15.15


def test_zero_floor_is_identity():
    level = NoiseLevel.from_db(-7.3)
    assert subtract_circuit_noise(level, CircuitNoiseFloor(-math.inf)).value == level.value
    assert add_circuit_noise(level, CircuitNoiseFloor(-math.inf)).value == level.value


def test_add_circuit_noise_examples():
    assert add_circuit_noise(NoiseLevel.from_db(-9.22), FLOOR).db == pytest.approx(-9.01, abs=0.005)
    assert add_circuit_noise(NoiseLevel(1.0), FLOOR).value == pytest.approx(1.0, abs=1e-15)
    # 0.001*(1 - n_c) + n_c = 0.0077540689..., evaluated with mpmath
    assert add_circuit_noise(NoiseLevel.from_db(-30.0), FLOOR).db == pytest.approx(-21.1047034296617, abs=1e-10)


def test_reading_at_or_below_floor_is_rejected():
    with pytest.raises(NonPhysicalMeasurementError):
        subtract_circuit_noise(NoiseLevel.from_db(-21.7), FLOOR)
    with pytest.raises(NonPhysicalMeasurementError):
        subtract_circuit_noise(NoiseLevel.from_db(-25.0), FLOOR)


def test_type_invariants():
    with pytest.raises(InvalidArgumentError):
        NoiseLevel(0.0)
    with pytest.raises(InvalidArgumentError):
        NoiseLevel(1.0, -0.1)
    with pytest.raises(InvalidArgumentError):
        CircuitNoiseFloor(0.0)
    with pytest.raises(InvalidArgumentError):
        CircuitNoiseFloor(math.nan)


def test_sigma_db_round_trip():
    level = NoiseLevel.from_db(-9.01, 0.14)
    assert level.sigma_db == pytest.approx(0.14, rel=1e-14)


@given(st.floats(-60.0, 60.0))
def test_db_round_trip(d):
    assert linear_to_db(db_to_linear(d)) == pytest.approx(d, abs=1e-12)


@given(st.floats(0.01, 60.0), st.floats(-60.0, -5.0))
def test_circuit_noise_round_trip(above_floor_db, floor_db):
    floor = CircuitNoiseFloor(floor_db)
    v = NoiseLevel.from_db(floor_db + above_floor_db)
    back = add_circuit_noise(subtract_circuit_noise(v, floor), floor)
    assert back.value == pytest.approx(v.value, rel=1e-12)


@given(st.floats(-20.0, 30.0), st.floats(0.001, 5.0))
def test_subtract_is_monotone_and_expands_away_from_shot_noise(level_db, delta):
    lo = NoiseLevel.from_db(level_db)
    hi = NoiseLevel.from_db(level_db + delta)
    assert subtract_circuit_noise(lo, FLOOR).value < subtract_circuit_noise(hi, FLOOR).value
    out = subtract_circuit_noise(lo, FLOOR).value
    if lo.value < 1.0:
        assert out < lo.value
    elif lo.value > 1.0:
        assert out > lo.value


@given(st.floats(1e-6, 1e4))
def test_add_never_goes_below_floor(v):
    assert add_circuit_noise(NoiseLevel(v), FLOOR).value >= FLOOR.linear
