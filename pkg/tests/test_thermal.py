"""Heater control loop and electrical diagnostics tests.

Oracles:
  * the open-loop plant has the closed form
    T(t) = target + (T0 - target) * exp(-t/tau), checked against the
    Euler integration at small steps;
  * through-origin and affine slopes have textbook normal-equation
    solutions computed here with plain numpy;
  * noiseless synthetic resistances must come back exactly.
"""

import math

import numpy as np
import pytest

from vaporcell.errors import DegenerateDataError, UnstableStepError
from vaporcell.records import TimeSeries
from vaporcell.thermal import (
    DEFAULT_GAINS,
    DEFAULT_RESIDUAL_FIELD_NT_PER_MA,
    LinearFit,
    PidGains,
    ThermalPlant,
    fit_affine,
    fit_residual_field,
    fit_through_origin,
    residual_field,
    resistance_from_iv,
    settling_time,
    simulate_pid,
)


def test_open_loop_step_response_matches_closed_form():
    # Constant full power, no controller action: fix gains so the
    # output saturates at a known level and compare with the exponential.
    plant = ThermalPlant(sensor_noise=0.0)
    gains = PidGains(kp=1e9, ki=0.0, kd=0.0, output_max=1.0)   # slam to 1 W
    setpoint = 1e6                                             # never reached
    dt = 0.5
    temp, power = simulate_pid(plant, gains, setpoint, duration=400.0, dt=dt)
    assert np.all(power.y[1:] == 1.0)
    target = plant.ambient + plant.gain * 1.0
    # discrete Euler: T_{k+1} = T_k + dt*(target - T_k)/tau exactly
    r = 1.0 - dt / plant.time_constant
    k = np.arange(temp.y.size)
    oracle = target + (plant.ambient - target) * r**k
    np.testing.assert_allclose(temp.y, oracle, rtol=1e-10)
    # and the discrete trace approximates the continuous exponential
    cont = target + (plant.ambient - target) * np.exp(-temp.t / plant.time_constant)
    assert np.max(np.abs(temp.y - cont)) < 0.2


def test_default_gains_settle_and_hold():
    plant = ThermalPlant()
    setpoint = 473.15
    rng = np.random.default_rng(2026)
    temp, power = simulate_pid(
        plant, DEFAULT_GAINS, setpoint, duration=2000.0, dt=1.0, rng=rng
    )
    t_settle = settling_time(temp, setpoint, tolerance=0.010)
    assert t_settle <= 1000.0, f"settled only at {t_settle:.0f} s"
    tail = temp.y[1200:]
    assert np.max(np.abs(tail - setpoint)) <= 0.010
    assert abs(tail.mean() - setpoint) < 0.002
    assert np.all(power.y >= 0.0) and np.all(power.y <= 3.0)


@pytest.mark.parametrize("setpoint", [323.15, 473.15, 500.0])
def test_integrator_removes_steady_state_error(setpoint):
    plant = ThermalPlant(sensor_noise=0.0)
    temp, _ = simulate_pid(plant, DEFAULT_GAINS, setpoint, duration=3000.0)
    assert abs(temp.y[-1] - setpoint) < 1e-3


def test_anti_windup_limits_overshoot():
    plant = ThermalPlant(sensor_noise=0.0)
    temp, _ = simulate_pid(plant, DEFAULT_GAINS, 473.15, duration=2000.0)
    overshoot = np.max(temp.y) - 473.15
    assert overshoot < 2.0, f"overshoot {overshoot:.2f} K suggests windup"


def test_output_clamped_to_power_limits():
    plant = ThermalPlant(sensor_noise=0.0)
    gains = PidGains(kp=100.0, ki=1.0, output_max=3.0)
    _, power = simulate_pid(plant, gains, 600.0, duration=300.0)
    assert np.max(power.y) <= 3.0
    assert np.min(power.y) >= 0.0


def test_step_size_guard_and_validation():
    plant = ThermalPlant(time_constant=200.0)
    with pytest.raises(UnstableStepError, match="too coarse"):
        simulate_pid(plant, DEFAULT_GAINS, 400.0, duration=100.0, dt=5.0)
    with pytest.raises(ValueError, match="dt"):
        simulate_pid(plant, DEFAULT_GAINS, 400.0, duration=100.0, dt=0.0)
    with pytest.raises(ValueError, match="duration"):
        simulate_pid(plant, DEFAULT_GAINS, 400.0, duration=0.5, dt=1.0)


def test_noise_only_with_generator():
    plant = ThermalPlant()
    t1, _ = simulate_pid(plant, DEFAULT_GAINS, 473.15, duration=200.0)
    t2, _ = simulate_pid(plant, DEFAULT_GAINS, 473.15, duration=200.0)
    np.testing.assert_array_equal(t1.y, t2.y)   # noiseless: bitwise equal
    rng = np.random.default_rng(8)
    t3, _ = simulate_pid(plant, DEFAULT_GAINS, 473.15, duration=200.0, rng=rng)
    assert not np.array_equal(t1.y, t3.y)


def test_settling_time_semantics():
    y = np.array([0.0, 5.0, 9.0, 9.9, 10.01, 10.0, 10.0])
    ts = TimeSeries(y, 1.0)
    # last point outside +-0.05 is index 3 -> settled from t=4 s
    assert settling_time(ts, 10.0, 0.05) == 4.0
    assert settling_time(ts, 10.0, 20.0) == 0.0
    assert settling_time(ts, 50.0, 0.05) == math.inf
    with pytest.raises(ValueError):
        settling_time(ts, 10.0, 0.0)


def test_plant_and_gain_validation():
    with pytest.raises(ValueError):
        ThermalPlant(time_constant=0.0)
    with pytest.raises(ValueError):
        ThermalPlant(sensor_noise=-0.1)
    with pytest.raises(ValueError):
        PidGains(kp=-1.0, ki=0.0)
    with pytest.raises(ValueError):
        PidGains(kp=1.0, ki=0.0, output_min=3.0, output_max=3.0)


# ----------------------------------------------------------- diagnostics


def test_through_origin_slope_matches_normal_equation():
    rng = np.random.default_rng(31)
    x = np.linspace(0.5e-3, 5e-3, 12)
    y = 505.0 * x + 1e-5 * rng.standard_normal(12)
    fit = fit_through_origin(x, y)
    oracle = float(x @ y) / float(x @ x)
    assert fit.slope == pytest.approx(oracle, rel=1e-14)
    assert fit.intercept == 0.0
    assert fit.slope_stderr > 0.0


def test_noiseless_resistances_are_exact():
    currents = np.linspace(1e-3, 6e-3, 6)
    heater = resistance_from_iv(currents, 505.0 * currents)
    sensor = resistance_from_iv(currents, 10_500.0 * currents)
    assert heater.slope == pytest.approx(505.0, rel=1e-12)
    assert sensor.slope == pytest.approx(10_500.0, rel=1e-12)
    assert heater.slope_stderr == pytest.approx(0.0, abs=1e-9)


def test_affine_fit_recovers_instrument_offset():
    currents = np.linspace(1e-3, 6e-3, 8)
    voltages = 505.0 * currents + 0.002
    fit = resistance_from_iv(currents, voltages, through_origin=False)
    assert fit.slope == pytest.approx(505.0, rel=1e-9)
    assert fit.intercept == pytest.approx(0.002, rel=1e-9)
    # forcing through the origin on offset data biases the slope by
    # exactly offset * sum(I) / sum(I^2)
    biased = resistance_from_iv(currents, voltages, through_origin=True)
    bias = 0.002 * currents.sum() / (currents @ currents)
    assert biased.slope == pytest.approx(505.0 + bias, rel=1e-12)
    assert abs(biased.slope - 505.0) > 100.0 * fit.slope_stderr + 0.1


def test_affine_stderr_matches_textbook_formula():
    rng = np.random.default_rng(32)
    x = np.linspace(0.0, 10.0, 30)
    y = 2.0 * x + 1.0 + 0.3 * rng.standard_normal(30)
    fit = fit_affine(x, y)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    sxx = float(np.sum((x - x.mean()) ** 2))
    oracle = math.sqrt(float(resid @ resid) / (x.size - 2) / sxx)
    assert fit.slope_stderr == pytest.approx(oracle, rel=1e-12)


def test_fit_validation():
    with pytest.raises(DegenerateDataError, match="at least 3"):
        fit_through_origin([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DegenerateDataError, match="zero"):
        fit_through_origin([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateDataError, match="identical"):
        fit_affine([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="1-D"):
        fit_through_origin([1.0, 2.0, 3.0], [1.0, 2.0])


def test_residual_field_scaling():
    assert DEFAULT_RESIDUAL_FIELD_NT_PER_MA == 0.134
    np.testing.assert_allclose(
        residual_field([0.0, 10.0, 100.0]), [0.0, 1.34, 13.4], rtol=1e-12
    )
    with pytest.raises(ValueError):
        residual_field(10.0, coefficient_nt_per_ma=-1.0)


def test_residual_field_coefficient_recovery():
    rng = np.random.default_rng(33)
    currents = np.linspace(5.0, 60.0, 12)
    fields = 0.134 * currents + 0.02 * rng.standard_normal(12)
    fit = fit_residual_field(currents, fields)
    assert fit.slope == pytest.approx(0.134, rel=0.01)
    assert isinstance(fit, LinearFit)
