"""Pressure-broadened absorption lineshapes and linewidth analysis.

The optical depth model is a sum of Lorentzians, one per hyperfine
component, sharing a single collisional width and a single center
shift:

    OD(nu) = n * r_e * c * f * l * sum_i A_i * (G/2) / (d_i^2 + (G/2)^2)

with d_i = nu - nu0 - offset_i.  Frequencies are in GHz relative to the
D1 centroid, densities in m^-3, path length in mm.  An optional
Gaussian width turns each component into a Voigt profile for cells
where Doppler broadening is not negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import voigt_profile

from . import atomic_data
from .atomic_data import (
    BufferGasCoefficients,
    TransitionLine,
    d1_transition_lines,
)
from .errors import (
    DegenerateDataError,
    DegenerateGridError,
    InsufficientDataError,
    NonConvergenceError,
)
from .fitkit import FitResult, least_squares
from .records import Spectrum

DEFAULT_PATH_LENGTH_MM = 4.0
WAFER_PATH_LENGTH_MM = 5.0


@dataclass(frozen=True)
class AbsorptionParams:
    """Physical parameters of the absorption model."""

    density: float                      # atoms per m^3
    linewidth: float                    # Lorentzian FWHM, GHz
    center_shift: float = 0.0           # common line shift, GHz
    path_length_mm: float = DEFAULT_PATH_LENGTH_MM
    oscillator_strength: float = atomic_data.D1_OSCILLATOR_STRENGTH
    doppler_fwhm: float | None = None   # Gaussian FWHM, GHz; None = Lorentzian

    def __post_init__(self):
        if self.density <= 0:
            raise ValueError(f"density must be positive, got {self.density}")
        if self.linewidth <= 0:
            raise ValueError(f"linewidth must be positive, got {self.linewidth}")
        if self.path_length_mm <= 0:
            raise ValueError("path length must be positive")
        if self.oscillator_strength <= 0:
            raise ValueError("oscillator strength must be positive")
        if self.doppler_fwhm is not None and self.doppler_fwhm <= 0:
            raise ValueError("doppler_fwhm must be positive when given")


def weighted_d1_lines(weights=None, registry=None) -> tuple[TransitionLine, ...]:
    """All D1 components of the requested isotopes, strengths scaled by
    the per-isotope weights (natural abundance by default).

    With weights summing to one the combined strengths sum to one, so
    the same density parameter means total alkali density.
    """
    reg = atomic_data.NATURAL_RB if registry is None else registry
    if weights is None:
        weights = atomic_data.natural_weights(reg)
    lines = []
    for name, weight in weights.items():
        if weight < 0:
            raise ValueError(f"negative weight for {name}")
        if weight == 0:
            continue
        iso = atomic_data.get_isotope(name, reg)
        for line in d1_transition_lines(iso):
            lines.append(replace(line, strength=line.strength * weight))
    if not lines:
        raise ValueError("no lines: all isotope weights are zero")
    return tuple(lines)


def _prefactor_per_ghz(params: AbsorptionParams) -> float:
    # n * r_e * c * f * l has units of Hz; divide by 1e9 to pair with
    # Lorentzians written in GHz.
    return (
        params.density
        * atomic_data.CLASSICAL_ELECTRON_RADIUS
        * atomic_data.SPEED_OF_LIGHT
        * params.oscillator_strength
        * (params.path_length_mm * 1e-3)
        / 1e9
    )


def optical_depth(nu, params: AbsorptionParams, lines) -> np.ndarray:
    """Optical depth at detuning nu (GHz, relative to the D1 centroid)."""
    nu = np.asarray(nu, dtype=float)
    half = params.linewidth / 2.0
    total = np.zeros_like(nu)
    if params.doppler_fwhm is None:
        for line in lines:
            d = nu - params.center_shift - line.offset
            total += line.strength * half / (d * d + half * half)
    else:
        sigma = params.doppler_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        for line in lines:
            d = nu - params.center_shift - line.offset
            # pi * voigt_profile reduces to the Lorentzian branch above
            # as sigma -> 0.
            total += line.strength * math.pi * voigt_profile(d, sigma, half)
    return _prefactor_per_ghz(params) * total


def optical_depth_jacobian(nu, params: AbsorptionParams, lines) -> np.ndarray:
    """d(OD)/d(density, linewidth, center_shift), Lorentzian model only."""
    if params.doppler_fwhm is not None:
        raise ValueError("analytic Jacobian covers the Lorentzian model only")
    nu = np.asarray(nu, dtype=float)
    k = _prefactor_per_ghz(params)
    half = params.linewidth / 2.0
    col_n = np.zeros_like(nu)
    col_g = np.zeros_like(nu)
    col_c = np.zeros_like(nu)
    for line in lines:
        d = nu - params.center_shift - line.offset
        denom = d * d + half * half
        col_n += line.strength * half / denom
        col_g += line.strength * (d * d - half * half) / (2.0 * denom * denom)
        col_c += line.strength * half * 2.0 * d / (denom * denom)
    return np.column_stack(
        (
            (k / params.density) * col_n,   # OD is linear in density
            k * col_g,
            k * col_c,
        )
    )


def transmission(nu, params: AbsorptionParams, lines, incident_power: float = 1.0):
    """Transmitted power: incident_power * exp(-OD)."""
    if incident_power <= 0:
        raise ValueError("incident power must be positive")
    return incident_power * np.exp(-optical_depth(nu, params, lines))


def simulate_absorption_spectrum(
    params: AbsorptionParams,
    lines,
    grid,
    incident_power: float = 1.0,
    noise_fraction: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Spectrum:
    """Transmitted-power sweep with optional multiplicative noise."""
    nu = np.asarray(grid, dtype=float)
    y = transmission(nu, params, lines, incident_power)
    if noise_fraction > 0.0:
        if rng is None:
            raise ValueError("noise requested but no random generator given")
        y = y * (1.0 + noise_fraction * rng.standard_normal(y.size))
        y = np.clip(y, 1e-12 * incident_power, None)
    return Spectrum(nu, y, x_unit="GHz", y_unit="W")


def optical_depth_spectrum(power: Spectrum, incident_power: float = 1.0) -> Spectrum:
    """Convert a transmitted-power sweep to optical depth."""
    if np.any(power.y <= 0):
        raise DegenerateDataError(
            "transmitted power must be positive to take a log"
        )
    return Spectrum(
        power.x, np.log(incident_power / power.y), x_unit=power.x_unit, y_unit="OD"
    )


def fit_absorption(
    data: Spectrum,
    initial: AbsorptionParams,
    lines,
    weights=None,
    min_span: float | None = None,
    max_iter: int = 200,
) -> FitResult:
    """Fit {density, linewidth, center_shift} to an optical-depth sweep.

    Density and linewidth are fit as logarithms internally, which keeps
    both positive and puts their gradients on a common scale; reported
    parameters and covariance are in natural units, ordered
    [density, linewidth, center_shift].
    """
    if len(data) < 10:
        raise DegenerateGridError(
            f"need at least 10 points to fit 3 parameters, got {len(data)}"
        )
    span = float(data.x[-1] - data.x[0])
    need = initial.linewidth if min_span is None else min_span
    if span < need:
        raise DegenerateGridError(
            f"sweep span {span:g} GHz is narrower than the minimum {need:g} GHz"
        )

    base = initial

    def to_params(p):
        return replace(
            base,
            density=math.exp(p[0]),
            linewidth=math.exp(p[1]),
            center_shift=p[2],
        )

    def model(p, x):
        return optical_depth(x, to_params(p), lines)

    analytic = base.doppler_fwhm is None

    def jac(p, x):
        params = to_params(p)
        J = optical_depth_jacobian(x, params, lines)
        # chain rule for the log parameters
        J[:, 0] *= params.density
        J[:, 1] *= params.linewidth
        return J

    p0 = np.array(
        [math.log(initial.density), math.log(initial.linewidth), initial.center_shift]
    )
    result = least_squares(
        model,
        data.x,
        data.y,
        p0,
        jacobian=jac if analytic else None,
        weights=weights,
        max_iter=max_iter,
    )
    if not result.converged:
        raise NonConvergenceError(
            f"absorption fit stopped after {result.iterations} iterations "
            f"({result.termination_reason.value})",
            result=result,
        )
    n = math.exp(result.params[0])
    gamma = math.exp(result.params[1])
    scale = np.diag([n, gamma, 1.0])
    result.params = np.array([n, gamma, result.params[2]])
    result.covariance = scale @ result.covariance @ scale
    return result


def absorption_params_from_fit(
    result: FitResult, base: AbsorptionParams
) -> AbsorptionParams:
    """Rebuild AbsorptionParams from a fit result, keeping fixed fields."""
    n, gamma, shift = result.params
    return replace(base, density=n, linewidth=gamma, center_shift=shift)


def buffer_density_from_linewidth(
    linewidth: float, coefficients: BufferGasCoefficients
) -> float:
    """Buffer-gas density (amagat) implied by a collisional FWHM (GHz)."""
    if linewidth <= 0:
        raise ValueError("linewidth must be positive")
    return linewidth / coefficients.broadening_coefficient


def shift_from_buffer_density(
    density_amg: float, coefficients: BufferGasCoefficients
) -> float:
    """Common line shift (GHz) produced by a buffer-gas density (amagat)."""
    if density_amg < 0:
        raise ValueError("buffer density cannot be negative")
    return coefficients.shift_coefficient * density_amg


@dataclass(frozen=True)
class DriftReport:
    """Linear drift summary for a repeated-linewidth aging series."""

    slope: float                # GHz per day
    slope_stderr: float
    intercept: float            # GHz at day 0
    max_abs_deviation: float    # worst |residual| from the trend line, GHz
    threshold: float            # pass criterion on |slope|, GHz per day
    passed: bool
    n_points: int


def linewidth_drift_report(days, linewidths, threshold: float) -> DriftReport:
    """Straight-line drift analysis of linewidth-vs-day data.

    Passing means the fitted |slope| does not exceed the threshold.
    """
    d = np.asarray(days, dtype=float)
    g = np.asarray(linewidths, dtype=float)
    if d.shape != g.shape or d.ndim != 1:
        raise ValueError("days and linewidths must be 1-D arrays of equal length")
    if d.size < 3:
        raise InsufficientDataError(
            f"need at least 3 measurements for a drift report, got {d.size}"
        )
    if not np.all(np.diff(d) > 0):
        raise ValueError("days must be strictly increasing")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    slope, intercept = np.polyfit(d, g, 1)
    resid = g - (slope * d + intercept)
    dof = d.size - 2
    sxx = float(np.sum((d - d.mean()) ** 2))
    slope_stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else math.inf
    return DriftReport(
        slope=float(slope),
        slope_stderr=slope_stderr,
        intercept=float(intercept),
        max_abs_deviation=float(np.max(np.abs(resid))),
        threshold=float(threshold),
        passed=bool(abs(slope) <= threshold),
        n_points=int(d.size),
    )
