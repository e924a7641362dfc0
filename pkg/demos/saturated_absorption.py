"""Synthesize a Doppler-free saturation spectrum and locate its features.

The two Rb isotopes contribute four Doppler valleys; pump-probe
saturation carves narrow transmission bumps at every transition and at
the crossover midpoints between transitions sharing a ground state.
The script prints the predicted feature table and verifies that simple
curvature-gated peak detection finds each one on the simulated curve.
"""

import sys

import numpy as np
from scipy.signal import find_peaks

from vaporcell.atomic_data import RB85, RB87
from vaporcell.sas import SasConfig, sas_feature_frequencies, sas_spectrum

cfg = SasConfig()          # room temperature, 20 MHz dips, 2 MHz grid
spec = sas_spectrum(cfg)

features = sorted(
    (f for iso in (RB85, RB87) for f in sas_feature_frequencies(iso)),
    key=lambda f: f.offset,
)
print(f"{'offset (GHz)':>13}  {'isotope':8} {'kind':10} transition")
for f in features:
    excited = "+".join(str(fe) for fe in f.excited_f)
    print(f"{f.offset:+13.4f}  {f.isotope:8} {f.kind:10} "
          f"Fg={f.ground_f} -> Fe={excited}")

# local maxima on the narrow-feature curvature scale
idx, _ = find_peaks(spec.y)
curv = spec.y[idx - 1] - 2.0 * spec.y[idx] + spec.y[idx + 1]
found = spec.x[idx[curv < -1e-4]]

print(f"\ndetected {found.size} narrow peaks on the simulated spectrum")
worst = max(float(np.min(np.abs(found - f.offset))) for f in features)
print(f"worst distance to a predicted feature: {worst * 1e3:.2f} MHz "
      f"(grid step {cfg.grid_step * 1e3:.0f} MHz)")

if "--plot" in sys.argv:
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(spec.x, spec.y, lw=0.8)
    for f in features:
        ax.axvline(f.offset, color="k", alpha=0.15, lw=0.8)
    ax.set_xlabel("detuning (GHz)")
    ax.set_ylabel("transmitted power (arb)")
    fig.tight_layout()
    plt.show()
