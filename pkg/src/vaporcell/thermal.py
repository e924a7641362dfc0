"""Cell heater control and electrical diagnostics.

The heater/cell assembly is modeled as a first-order plant: the cell
temperature relaxes toward ambient plus gain*power with one thermal
time constant.  A discrete PID with output clamping and conditional
anti-windup drives it; the derivative term acts on the measurement so
setpoint steps do not kick the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, UnstableStepError
from .records import TimeSeries

DEFAULT_RESIDUAL_FIELD_NT_PER_MA = 0.134


@dataclass(frozen=True)
class ThermalPlant:
    """First-order thermal model of the heated cell."""

    time_constant: float = 200.0        # s
    gain: float = 120.0                 # K per W of heater power
    ambient: float = 298.15             # K
    sensor_noise: float = 0.003         # K rms per sample, applied to readings
    heater_resistance: float = 505.0    # ohm
    sensor_resistance: float = 10500.0  # ohm at the operating point

    def __post_init__(self):
        if self.time_constant <= 0 or self.gain <= 0:
            raise ValueError("time constant and gain must be positive")
        if self.sensor_noise < 0:
            raise ValueError("sensor noise cannot be negative")
        if self.heater_resistance <= 0 or self.sensor_resistance <= 0:
            raise ValueError("resistances must be positive")


@dataclass(frozen=True)
class PidGains:
    """Discrete PID settings; output is heater power in watts."""

    kp: float                           # W per K
    ki: float                           # W per (K*s)
    kd: float = 0.0                     # W*s per K
    output_min: float = 0.0             # W
    output_max: float = 3.0             # W

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0 or self.kd < 0:
            raise ValueError("gains cannot be negative")
        if self.output_min >= self.output_max:
            raise ValueError("output_min must be below output_max")


DEFAULT_GAINS = PidGains(kp=0.25, ki=0.008)


def simulate_pid(
    plant: ThermalPlant,
    gains: PidGains,
    setpoint: float,
    duration: float,
    dt: float = 1.0,
    rng: np.random.Generator | None = None,
    initial_temperature: float | None = None,
) -> tuple[TimeSeries, TimeSeries]:
    """Closed-loop run; returns (temperature, heater_power) traces.

    The returned temperature is the true plant state; the controller
    only ever sees it through the noisy sensor.  Sensor noise is drawn
    up front from the supplied generator so a given seed reproduces the
    run sample for sample; without a generator readings are noiseless.

    The explicit Euler plant update is only faithful for steps well
    under the plant time constant, hence the dt check.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt > plant.time_constant / 50.0:
        raise UnstableStepError(
            f"dt={dt:g} s too coarse for a {plant.time_constant:g} s plant; "
            f"need dt <= {plant.time_constant / 50.0:g} s"
        )
    if duration <= dt:
        raise ValueError("duration must cover at least one step")
    n = int(round(duration / dt))
    noise = (
        plant.sensor_noise * rng.standard_normal(n)
        if rng is not None and plant.sensor_noise > 0
        else np.zeros(n)
    )

    temp = np.empty(n + 1)
    power = np.empty(n + 1)
    t_true = plant.ambient if initial_temperature is None else float(
        initial_temperature
    )
    temp[0] = t_true
    power[0] = 0.0
    integral = 0.0
    prev_meas = t_true
    for k in range(n):
        measured = t_true + noise[k]
        error = setpoint - measured
        derivative = -(measured - prev_meas) / dt
        prev_meas = measured
        candidate = integral + error * dt
        u_raw = gains.kp * error + gains.ki * candidate + gains.kd * derivative
        saturating_high = u_raw > gains.output_max and error > 0
        saturating_low = u_raw < gains.output_min and error < 0
        if not (saturating_high or saturating_low):
            integral = candidate
        u = gains.kp * error + gains.ki * integral + gains.kd * derivative
        u = min(max(u, gains.output_min), gains.output_max)
        t_true += dt * (plant.gain * u - (t_true - plant.ambient)) / (
            plant.time_constant
        )
        temp[k + 1] = t_true
        power[k + 1] = u
    fs = 1.0 / dt
    return (
        TimeSeries(temp, fs, y_unit="K"),
        TimeSeries(power, fs, y_unit="W"),
    )


def settling_time(ts: TimeSeries, setpoint: float, tolerance: float) -> float:
    """First time after which the trace stays within tolerance forever.

    Returns inf if the trace is still outside tolerance at the end.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    outside = np.nonzero(np.abs(ts.y - setpoint) > tolerance)[0]
    if outside.size == 0:
        return float(ts.t0)
    k = int(outside[-1]) + 1
    if k >= len(ts):
        return math.inf
    return float(ts.t0 + k / ts.sample_rate)


@dataclass(frozen=True)
class LinearFit:
    """Straight-line fit summary for two-terminal diagnostics."""

    slope: float
    slope_stderr: float
    intercept: float
    n_points: int


def fit_through_origin(x, y) -> LinearFit:
    """Least-squares slope of y = slope * x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < 3:
        raise DegenerateDataError(f"need at least 3 points, got {x.size}")
    sxx = float(x @ x)
    if sxx == 0.0:
        raise DegenerateDataError("all x values are zero; slope is undefined")
    slope = float(x @ y) / sxx
    resid = y - slope * x
    var = float(resid @ resid) / (x.size - 1) / sxx
    return LinearFit(slope=slope, slope_stderr=math.sqrt(var),
                     intercept=0.0, n_points=int(x.size))


def fit_affine(x, y) -> LinearFit:
    """Least-squares fit of y = slope * x + intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < 3:
        raise DegenerateDataError(f"need at least 3 points, got {x.size}")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise DegenerateDataError("all x values identical; slope is undefined")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = x.size - 2
    var = float(resid @ resid) / dof / sxx if dof > 0 else math.inf
    return LinearFit(slope=float(slope), slope_stderr=math.sqrt(var),
                     intercept=float(intercept), n_points=int(x.size))


def resistance_from_iv(currents, voltages, through_origin: bool = True) -> LinearFit:
    """Resistance from (I, V) pairs; slope of V against I, in ohms.

    A passive resistive element passes through the origin; set
    through_origin=False to tolerate an instrument offset.
    """
    if through_origin:
        return fit_through_origin(currents, voltages)
    return fit_affine(currents, voltages)


def residual_field(
    current_ma, coefficient_nt_per_ma: float = DEFAULT_RESIDUAL_FIELD_NT_PER_MA
):
    """Stray field (nT) produced by the heater current (mA)."""
    if coefficient_nt_per_ma < 0:
        raise ValueError("coefficient cannot be negative")
    return coefficient_nt_per_ma * np.asarray(current_ma, dtype=float)


def fit_residual_field(currents_ma, fields_nt) -> LinearFit:
    """Recover the stray-field coefficient (nT/mA) from measured pairs."""
    return fit_through_origin(currents_ma, fields_nt)
