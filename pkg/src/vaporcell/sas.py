"""Saturated-absorption spectra on a Doppler-broadened D1 line.

In a counter-propagating pump/probe geometry only atoms with zero axial
velocity interact with both beams at a hyperfine line center, burning a
narrow dip there; a velocity class tuned halfway between two lines that
share a ground state talks to both beams at once, producing a crossover
dip at the exact mean of the pair.  The model carves configurable
Lorentzian dips into the Doppler envelope at those positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import atomic_data
from .atomic_data import IsotopeSpec, d1_transition_lines
from .errors import GridTooCoarseError
from .records import Spectrum

LN2 = math.log(2.0)


def doppler_fwhm_ghz(isotope: IsotopeSpec, temperature: float) -> float:
    """Gaussian Doppler FWHM of the D1 line at the given temperature (K)."""
    if temperature <= 0:
        raise ValueError("temperature must be positive (kelvin)")
    nu0_ghz = atomic_data.D1_CENTROID_THZ * 1e3
    mc2 = isotope.mass_kg * atomic_data.SPEED_OF_LIGHT**2
    return nu0_ghz * math.sqrt(8.0 * LN2 * atomic_data.BOLTZMANN * temperature / mc2)


@dataclass(frozen=True)
class SasFeature:
    """One sub-Doppler feature: a line dip or a crossover dip."""

    isotope: str
    kind: str                       # "dip" or "crossover"
    ground_f: int
    excited_f: tuple[int, ...]      # one entry for a dip, two for a crossover
    offset: float                   # GHz relative to the D1 centroid

    def __post_init__(self):
        assert self.kind in ("dip", "crossover")
        assert len(self.excited_f) == (1 if self.kind == "dip" else 2)


def sas_feature_frequencies(isotope: IsotopeSpec) -> tuple[SasFeature, ...]:
    """All dips and crossovers of one isotope, sorted by frequency.

    Dips sit at the hyperfine line centers.  Each pair of lines sharing
    a ground state adds a crossover at the exact arithmetic mean of the
    pair; degenerate pairs (identical offsets) are skipped.
    """
    features = []
    by_ground: dict[int, list] = {}
    for line in d1_transition_lines(isotope):
        features.append(
            SasFeature(
                isotope=isotope.name,
                kind="dip",
                ground_f=line.ground_f,
                excited_f=(line.excited_f,),
                offset=line.offset,
            )
        )
        by_ground.setdefault(line.ground_f, []).append(line)
    for fg, lines in by_ground.items():
        lines = sorted(lines, key=lambda ln: ln.offset)
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                a, b = lines[i], lines[j]
                if a.offset == b.offset:
                    continue
                features.append(
                    SasFeature(
                        isotope=isotope.name,
                        kind="crossover",
                        ground_f=fg,
                        excited_f=(a.excited_f, b.excited_f),
                        offset=(a.offset + b.offset) / 2.0,
                    )
                )
    return tuple(sorted(features, key=lambda ft: ft.offset))


@dataclass
class SasConfig:
    """Sweep and feature settings for a saturated-absorption spectrum."""

    isotope_weights: dict | None = None     # None = natural abundance
    temperature: float = 294.15             # K
    lamb_dip_width_mhz: float = 20.0        # Lorentzian FWHM of each dip
    lamb_dip_depth: float = 0.3             # fraction of local Doppler OD;
                                            # 0 gives the bare envelope
    envelope_peak_od: float = 1.0           # overall optical-depth scale
    grid_min: float = -6.0                  # GHz
    grid_max: float = 6.0                   # GHz
    grid_step: float = 0.002                # GHz
    incident_power: float = 1.0             # W

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.lamb_dip_width_mhz <= 0:
            raise ValueError("dip width must be positive")
        if not 0.0 <= self.lamb_dip_depth <= 1.0:
            raise ValueError("dip depth must be in [0, 1]")
        if self.envelope_peak_od <= 0:
            raise ValueError("envelope optical depth must be positive")
        if self.grid_min >= self.grid_max:
            raise ValueError("grid_min must be below grid_max")
        if self.grid_step <= 0:
            raise ValueError("grid step must be positive")
        if self.incident_power <= 0:
            raise ValueError("incident power must be positive")

    def grid(self) -> np.ndarray:
        return np.arange(self.grid_min, self.grid_max + self.grid_step / 2,
                         self.grid_step)


def sas_spectrum(cfg: SasConfig, registry: dict | None = None) -> Spectrum:
    """Transmitted power over the sweep, dips carved into the envelope.

    The dip width must be resolved: a grid step above a quarter of the
    dip FWHM raises GridTooCoarseError.  Dips are multiplicative in
    optical depth, so a dip removes the configured fraction of the
    local Doppler absorption.
    """
    width_ghz = cfg.lamb_dip_width_mhz * 1e-3
    if cfg.grid_step > width_ghz / 4.0:
        raise GridTooCoarseError(
            f"grid step {cfg.grid_step:g} GHz cannot resolve a "
            f"{cfg.lamb_dip_width_mhz:g} MHz dip; need <= {width_ghz / 4.0:g} GHz"
        )
    reg = atomic_data.NATURAL_RB if registry is None else registry
    weights = cfg.isotope_weights
    if weights is None:
        weights = atomic_data.natural_weights(reg)

    nu = cfg.grid()
    envelope = np.zeros_like(nu)
    dip_sum = np.zeros_like(nu)
    half = width_ghz / 2.0
    for name, weight in weights.items():
        if weight == 0:
            continue
        iso = atomic_data.get_isotope(name, reg)
        fwhm_d = doppler_fwhm_ghz(iso, cfg.temperature)
        if width_ghz >= fwhm_d:
            raise ValueError(
                f"dip width {width_ghz:g} GHz is not narrow compared with the "
                f"{fwhm_d:g} GHz Doppler width of {name}"
            )
        for line in d1_transition_lines(iso):
            d = nu - line.offset
            envelope += weight * line.strength * np.exp(-4.0 * LN2 * d * d / fwhm_d**2)
        for feat in sas_feature_frequencies(iso):
            d = nu - feat.offset
            dip_sum += cfg.lamb_dip_depth * half * half / (d * d + half * half)

    od = cfg.envelope_peak_od * envelope * np.clip(1.0 - dip_sum, 0.0, None)
    return Spectrum(nu, cfg.incident_power * np.exp(-od), x_unit="GHz", y_unit="W")
