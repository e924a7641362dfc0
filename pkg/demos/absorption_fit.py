"""Fit a pressure-broadened absorption spectrum and read back the cell.

Simulates a noisy transmission scan across the Rb D1 manifold, fits the
three free parameters (alkali density, homogeneous linewidth, pressure
shift), and converts the fitted linewidth into a nitrogen buffer-gas
density.  Run with --plot to see the spectrum and the fit.
"""

import sys

import numpy as np

from vaporcell.atomic_data import N2_BUFFER
from vaporcell.lineshape import (
    AbsorptionParams,
    buffer_density_from_linewidth,
    fit_absorption,
    optical_depth,
    optical_depth_spectrum,
    shift_from_buffer_density,
    simulate_absorption_spectrum,
    weighted_d1_lines,
)

truth = AbsorptionParams(density=7.0e18, linewidth=16.38, center_shift=-7.59)
lines = weighted_d1_lines()            # natural-abundance Rb, both isotopes
grid = np.linspace(-60.0, 45.0, 601)   # GHz from the unshifted D1 center

rng = np.random.default_rng(7)
power = simulate_absorption_spectrum(truth, lines, grid,
                                     noise_fraction=0.01, rng=rng)
od = optical_depth_spectrum(power)

start = AbsorptionParams(density=3.0e18, linewidth=10.0, center_shift=0.0)
fit = fit_absorption(od, start, lines)
dens, gamma, shift = fit.params
err_dens, err_gamma, err_shift = fit.stderr

print("fitted parameters (1% amplitude noise):")
print(f"  alkali density   {dens:.3e} +- {err_dens:.1e} m^-3   "
      f"(truth {truth.density:.3e})")
print(f"  linewidth        {gamma:.3f} +- {err_gamma:.3f} GHz      "
      f"(truth {truth.linewidth})")
print(f"  pressure shift   {shift:+.3f} +- {err_shift:.3f} GHz      "
      f"(truth {truth.center_shift})")

n_buffer = buffer_density_from_linewidth(gamma, N2_BUFFER)
print(f"\nimplied N2 buffer density: {n_buffer:.4f} amagat")
print(f"expected shift at that density: "
      f"{shift_from_buffer_density(n_buffer, N2_BUFFER):+.2f} GHz")

if "--plot" in sys.argv:
    import matplotlib.pyplot as plt

    model = optical_depth(grid, AbsorptionParams(dens, gamma, shift), lines)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(od.x, od.y, ".", ms=3, label="measured optical depth")
    ax.plot(grid, model, "-", label="fit")
    ax.set_xlabel("detuning (GHz)")
    ax.set_ylabel("optical depth")
    ax.legend()
    fig.tight_layout()
    plt.show()
