"""Cell heater PID loop plus the electrical housekeeping fits.

Runs the thermal plant to a 200 C setpoint under the default gains,
reports settling time and hold quality, then demonstrates the two
housekeeping diagnostics: resistance from I-V data and the residual
magnetic field per unit heater current.
"""

import sys

import numpy as np

from vaporcell.thermal import (
    DEFAULT_GAINS,
    ThermalPlant,
    fit_residual_field,
    resistance_from_iv,
    settling_time,
    simulate_pid,
)

plant = ThermalPlant()
setpoint = 473.15
rng = np.random.default_rng(13)
temp, power = simulate_pid(plant, DEFAULT_GAINS, setpoint,
                           duration=2000.0, dt=1.0, rng=rng)

settle = settling_time(temp, setpoint, tolerance=0.010)
tail = temp.y[temp.y.size // 2:]
print(f"setpoint {setpoint - 273.15:.0f} C, gains kp={DEFAULT_GAINS.kp} "
      f"ki={DEFAULT_GAINS.ki}")
print(f"  settling time to +-10 mK : {settle:.0f} s")
print(f"  tail mean error          : {np.mean(tail) - setpoint:+.4f} K")
print(f"  tail max  error          : {np.max(np.abs(tail - setpoint)):.4f} K")
print(f"  peak heater power        : {np.max(power.y):.2f} W")

# I-V characterization, through the origin
currents = np.linspace(1e-3, 6e-3, 8)
heater = resistance_from_iv(currents, 505.0 * currents)
sensor = resistance_from_iv(currents, 10_500.0 * currents)
print(f"\nheater resistance : {heater.slope:8.1f} ohm")
print(f"sensor resistance : {sensor.slope:8.1f} ohm")

# stray field from the heater current, nT per mA
ma = np.linspace(5.0, 50.0, 10)
fields = 0.134 * ma * (1.0 + 0.01 * rng.standard_normal(ma.size))
res = fit_residual_field(ma, fields)
print(f"residual field    : {res.slope:.4f} +- {res.slope_stderr:.4f} nT/mA")

if "--plot" in sys.argv:
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    axes[0].plot(temp.t, temp.y - 273.15, lw=0.8)
    axes[0].axhline(setpoint - 273.15, color="k", ls="--", lw=0.8)
    axes[0].set_ylabel("cell temperature (C)")
    axes[1].plot(power.t, power.y, lw=0.8)
    axes[1].set_ylabel("heater power (W)")
    axes[1].set_xlabel("time (s)")
    fig.tight_layout()
    plt.show()
