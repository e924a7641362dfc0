"""Spin-noise spectroscopy: stochastic rotation records and their PSD model.

Thermal spin fluctuations of each isotope precess at its Larmor
frequency and decay with a transverse correlation time tau, so the
measured rotation noise is a sum of complex Ornstein-Uhlenbeck
processes.  The one-sided power spectral density is then a Lorentzian
per isotope on a white background:

    PSD(f) = bg + sum_i area_i * (hwhm_i / pi) / ((f - f_i)^2 + hwhm_i^2)

with hwhm = 1/(2 pi tau) and area equal to the variance contributed by
that isotope.  Frequencies are in Hz throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import atomic_data
from .atomic_data import IsotopeSpec
from .errors import AliasingError, NonConvergenceError
from .fitkit import FitResult, least_squares
from .records import Spectrum, TimeSeries


def larmor_frequency(isotope: IsotopeSpec, field_ut: float) -> float:
    """Larmor frequency in Hz for a field in microtesla."""
    if field_ut < 0:
        raise ValueError("field magnitude cannot be negative")
    return isotope.gyromagnetic_ratio * field_ut * 1e3


@dataclass(frozen=True)
class SnsPeak:
    """One Lorentzian spin-noise peak."""

    frequency: float        # Hz
    hwhm: float             # Hz
    area: float             # integrated power, y-units^2

    def __post_init__(self):
        if self.hwhm <= 0:
            raise ValueError("hwhm must be positive")

    @property
    def height(self) -> float:
        """Peak PSD above background."""
        return self.area / (math.pi * self.hwhm)


@dataclass(frozen=True)
class SnsModel:
    """Sum-of-Lorentzians PSD model with a white background."""

    peaks: tuple[SnsPeak, ...]
    background: float       # y-units^2 per Hz

    def __post_init__(self):
        if not self.peaks:
            raise ValueError("model needs at least one peak")

    def as_array(self) -> np.ndarray:
        p = [self.background]
        for pk in self.peaks:
            p.extend((pk.frequency, pk.hwhm, pk.area))
        return np.array(p)

    @classmethod
    def from_array(cls, p) -> "SnsModel":
        p = np.asarray(p, dtype=float)
        if (p.size - 1) % 3 != 0:
            raise ValueError("parameter vector must be 1 + 3*npeaks long")
        peaks = tuple(
            SnsPeak(float(p[i]), abs(float(p[i + 1])), float(p[i + 2]))
            for i in range(1, p.size, 3)
        )
        return cls(peaks=peaks, background=float(p[0]))


def sns_psd(f, model: SnsModel) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    total = np.full_like(f, model.background)
    for pk in model.peaks:
        u = f - pk.frequency
        total += pk.area * (pk.hwhm / math.pi) / (u * u + pk.hwhm * pk.hwhm)
    return total


def sns_psd_model(p, f) -> np.ndarray:
    """Array-parameter PSD: p = [bg, f1, hwhm1, area1, f2, ...]."""
    f = np.asarray(f, dtype=float)
    total = np.full_like(f, p[0])
    for i in range(1, len(p), 3):
        f0, hwhm, area = p[i], p[i + 1], p[i + 2]
        u = f - f0
        total += area * (hwhm / math.pi) / (u * u + hwhm * hwhm)
    return total


def sns_psd_jacobian(p, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    J = np.zeros((f.size, len(p)))
    J[:, 0] = 1.0
    for i in range(1, len(p), 3):
        f0, hwhm, area = p[i], p[i + 1], p[i + 2]
        u = f - f0
        denom = u * u + hwhm * hwhm
        J[:, i] = area * (hwhm / math.pi) * 2.0 * u / denom**2
        J[:, i + 1] = (area / math.pi) * (u * u - hwhm * hwhm) / denom**2
        J[:, i + 2] = (hwhm / math.pi) / denom
    return J


def simulate_spin_noise(
    field_ut: float,
    duration: float,
    sample_rate: float,
    correlation_times: dict,
    rng: np.random.Generator,
    weights: dict | None = None,
    power_scale: float = 1.0,
    registry: dict | None = None,
) -> TimeSeries:
    """Synthetic rotation-noise record for a natural-abundance cell.

    Each isotope contributes a complex first-order autoregressive
    process with pole exp((2j pi nu_L - 1/tau) dt), scaled so the real
    part carries a variance of power_scale * weight.  The record is the
    sum of real parts, so its PSD matches sns_psd with
    area = power_scale * weight and hwhm = 1/(2 pi tau).
    """
    if duration <= 0 or sample_rate <= 0:
        raise ValueError("duration and sample rate must be positive")
    if power_scale <= 0:
        raise ValueError("power scale must be positive")
    reg = atomic_data.NATURAL_RB if registry is None else registry
    if weights is None:
        weights = atomic_data.natural_weights(reg)
    n = int(round(duration * sample_rate))
    if n < 16:
        raise ValueError("record too short to be useful")
    dt = 1.0 / sample_rate
    fastest = max(
        larmor_frequency(atomic_data.get_isotope(name, reg), field_ut)
        for name in weights
    )
    if sample_rate < 4.0 * fastest:
        raise AliasingError(
            f"sample rate {sample_rate:g} Hz is below 4x the fastest Larmor "
            f"frequency {fastest:g} Hz"
        )
    total = np.zeros(n)
    for name in sorted(weights):
        weight = weights[name]
        if weight == 0:
            continue
        iso = atomic_data.get_isotope(name, reg)
        tau = float(correlation_times[name])
        if tau <= 0:
            raise ValueError(f"correlation time for {name} must be positive")
        nu = larmor_frequency(iso, field_ut)
        pole = np.exp((2j * math.pi * nu - 1.0 / tau) * dt)
        var_z = 2.0 * power_scale * weight     # complex variance; Re carries half
        sigma_w = math.sqrt(var_z * (1.0 - abs(pole) ** 2))
        w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * (
            sigma_w / math.sqrt(2.0)
        )
        z0 = (rng.standard_normal() + 1j * rng.standard_normal()) * math.sqrt(
            var_z / 2.0
        )
        z, _ = lfilter([1.0], [1.0, -pole], w, zi=np.array([pole * z0]))
        total += z.real
    return TimeSeries(total, sample_rate, y_unit="arb")


def fit_sns(data: Spectrum, initial: SnsModel, max_iter: int = 200) -> FitResult:
    """Fit the sum-of-Lorentzians PSD model to a measured spectrum.

    The spectrum y-axis is the PSD (power per Hz).  Data are normalized
    to unit maximum internally; returned parameters are in data units,
    ordered [bg, f1, hwhm1, area1, ...] with widths folded positive.
    Overlapping fitted peaks (closer than the sum of their widths) emit
    a warning because their areas trade off against each other.
    """
    p0 = initial.as_array()
    if len(data) < 3 * p0.size:
        raise ValueError(
            f"{len(data)} PSD bins cannot support {p0.size} parameters"
        )
    scale = max(float(np.max(np.abs(data.y))), 1e-300)
    y_n = data.y / scale
    p0_n = p0.copy()
    p0_n[0] /= scale
    for i in range(3, p0_n.size, 3):
        p0_n[i] /= scale

    result = least_squares(
        sns_psd_model, data.x, y_n, p0_n, jacobian=sns_psd_jacobian,
        max_iter=max_iter,
    )
    if not result.converged:
        raise NonConvergenceError(
            f"spin-noise fit stopped after {result.iterations} iterations "
            f"({result.termination_reason.value})",
            result=result,
        )
    rescale = np.ones(p0.size)
    rescale[0] = scale
    rescale[3::3] = scale
    result.params = result.params * rescale
    result.covariance = result.covariance * np.outer(rescale, rescale)
    for i in range(2, result.params.size, 3):
        result.params[i] = abs(result.params[i])

    model = SnsModel.from_array(result.params)
    peaks = sorted(model.peaks, key=lambda pk: pk.frequency)
    for a, b in zip(peaks, peaks[1:]):
        if b.frequency - a.frequency < a.hwhm + b.hwhm:
            warnings.warn(
                f"peaks at {a.frequency:g} and {b.frequency:g} Hz are not "
                "resolved; their areas are strongly correlated",
                stacklevel=2,
            )
    return result


def sns_model_from_fit(result: FitResult) -> SnsModel:
    return SnsModel.from_array(result.params)
