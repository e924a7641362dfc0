"""Spin-noise spectroscopy: two isotopes precessing in a 10 uT field.

Generates a two-second Faraday-rotation noise record, estimates its
spectral density, and fits the pair of Lorentzian peaks.  The peak
frequencies measure the field through each isotope's gyromagnetic
ratio and the areas reproduce the natural abundance ratio.
"""

import math
import sys

from vaporcell.atomic_data import RB85, RB87
from vaporcell.records import Spectrum
from vaporcell.sigproc import welch_asd
from vaporcell.sns import (
    SnsModel,
    SnsPeak,
    fit_sns,
    larmor_frequency,
    simulate_spin_noise,
    sns_model_from_fit,
)

import numpy as np

field_ut = 10.0
tau = 1.0e-3               # transverse spin correlation time, s
rng = np.random.default_rng(21)

ts = simulate_spin_noise(field_ut=field_ut, duration=2.0,
                         sample_rate=400_000.0,
                         correlation_times={"Rb85": tau, "Rb87": tau},
                         rng=rng)
est = welch_asd(ts, segment_length=4096)
psd = est.power_spectrum()

nu85 = larmor_frequency(RB85, field_ut)
nu87 = larmor_frequency(RB87, field_ut)
print(f"predicted precession peaks: {nu85 / 1e3:.2f} and "
      f"{nu87 / 1e3:.2f} kHz at {field_ut} uT")

hwhm0 = 1.0 / (2.0 * math.pi * tau)
keep = (psd.x > 35e3) & (psd.x < 85e3)
initial = SnsModel(peaks=(SnsPeak(nu85 * 1.01, hwhm0 * 1.3, 0.7),
                          SnsPeak(nu87 * 0.99, hwhm0 * 1.3, 0.3)),
                   background=1e-9)
res = fit_sns(Spectrum(psd.x[keep], psd.y[keep]), initial)
model = sns_model_from_fit(res)
p85, p87 = sorted(model.peaks, key=lambda p: p.frequency)

print("fitted peaks:")
for name, peak, nu in (("Rb85", p85, nu85), ("Rb87", p87, nu87)):
    print(f"  {name}: {peak.frequency / 1e3:9.3f} kHz "
          f"(err {peak.frequency - nu:+6.1f} Hz), "
          f"hwhm {peak.hwhm:6.1f} Hz, area {peak.area:.3f}")
print(f"area ratio  {p85.area / p87.area:.3f} "
      f"(abundance ratio {RB85.abundance / RB87.abundance:.3f})")
print(f"field from Rb87 peak: "
      f"{p87.frequency / (RB87.gyromagnetic_ratio * 1e3):.4f} uT")

if "--plot" in sys.argv:
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(psd.x / 1e3, psd.y, lw=0.6, label="Welch estimate")
    ax.set_xlim(30, 90)
    ax.set_xlabel("frequency (kHz)")
    ax.set_ylabel("noise power density (arb/Hz)")
    ax.legend()
    fig.tight_layout()
    plt.show()
