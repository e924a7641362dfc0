"""Spectral estimation, lock-in demodulation, and sensitivity scaling.

The Welch estimator returns amplitude spectral density (square root of
the one-sided power density), since sensor noise floors are quoted per
root hertz.  The lock-in applies the textbook gain-of-two convention:
an input A*sin(2 pi f t + phase) demodulated at (f, phase) settles to A
in the in-phase output and 0 in quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.signal import butter, get_window, sosfilt, welch

from .errors import (
    AliasingError,
    EmptyBandError,
    InsufficientDataError,
    ZeroResponseError,
)
from .records import Spectrum, TimeSeries, fmt_exact

DEFAULT_SEGMENT_LENGTH = 4096
DEFAULT_OVERLAP = 0.5
DEFAULT_WINDOW = "hann"

# Response magnitudes below this are treated as "no response": dividing
# by them would just amplify estimator noise into nonsense.
MIN_RESPONSE = 1e-3


@dataclass
class PsdEstimate:
    """One-sided amplitude spectral density with its estimator settings."""

    f: np.ndarray               # Hz
    asd: np.ndarray             # y-unit per sqrt(Hz)
    window: str
    segment_length: int
    overlap: float
    enbw: float                 # equivalent noise bandwidth, Hz
    y_unit: str = "arb"

    def to_csv(self, path) -> None:
        lines = [
            f"# window={self.window}",
            f"# segment_length={self.segment_length}",
            f"# overlap={fmt_exact(self.overlap)}",
            f"# enbw={fmt_exact(self.enbw)}",
            f"f_Hz,asd_{self.y_unit}",
        ]
        lines.extend(
            f"{fmt_exact(a)},{fmt_exact(b)}" for a, b in zip(self.f, self.asd)
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "PsdEstimate":
        meta = {}
        header = None
        fs, asds = [], []
        with open(path, "r", encoding="utf-8") as fh:
            for ln in fh:
                ln = ln.strip()
                if not ln:
                    continue
                if ln.startswith("#"):
                    key, _, value = ln.lstrip("#").strip().partition("=")
                    meta[key.strip()] = value.strip()
                    continue
                if header is None:
                    header = ln.split(",")
                    continue
                a, b = ln.split(",")
                fs.append(float(a))
                asds.append(float(b))
        if header is None or not header[1].startswith("asd_"):
            raise ValueError(f"{path}: not an ASD file")
        return cls(
            f=np.array(fs),
            asd=np.array(asds),
            window=meta.get("window", "unknown"),
            segment_length=int(meta.get("segment_length", 0)),
            overlap=float(meta.get("overlap", "nan")),
            enbw=float(meta.get("enbw", "nan")),
            y_unit=header[1][4:],
        )

    def power_spectrum(self) -> Spectrum:
        """PSD (asd squared) as a Spectrum, for fitting."""
        return Spectrum(
            self.f, self.asd**2, x_unit="Hz", y_unit=f"({self.y_unit})^2/Hz"
        )


def welch_asd(
    ts: TimeSeries,
    segment_length: int = DEFAULT_SEGMENT_LENGTH,
    overlap: float = DEFAULT_OVERLAP,
    window: str = DEFAULT_WINDOW,
) -> PsdEstimate:
    """Welch amplitude spectral density of a uniform record.

    Requires at least two segments of data so there is real averaging.
    """
    if segment_length < 16:
        raise ValueError("segment_length must be at least 16")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must be in [0, 1)")
    if len(ts) < 2 * segment_length:
        raise InsufficientDataError(
            f"record of {len(ts)} samples is shorter than two "
            f"{segment_length}-sample segments"
        )
    w = get_window(window, segment_length)
    f, psd = welch(
        ts.y,
        fs=ts.sample_rate,
        window=w,
        nperseg=segment_length,
        noverlap=int(overlap * segment_length),
        detrend="constant",
        scaling="density",
        return_onesided=True,
    )
    enbw = ts.sample_rate * float(np.sum(w**2)) / float(np.sum(w)) ** 2
    return PsdEstimate(
        f=f,
        asd=np.sqrt(psd),
        window=window,
        segment_length=segment_length,
        overlap=overlap,
        enbw=enbw,
        y_unit=ts.y_unit,
    )


def lock_in(
    ts: TimeSeries,
    ref_freq: float,
    ref_phase: float = 0.0,
    cutoff: float | None = None,
    order: int = 4,
) -> tuple[TimeSeries, TimeSeries]:
    """Dual-phase demodulation at ref_freq.

    Returns (in_phase, quadrature) time series including the filter
    settling transient; discard the head or use steady_mean() on the
    tail.  The low-pass is a single Butterworth stage of the given
    order, default cutoff ref_freq / 10.
    """
    fs = ts.sample_rate
    if ref_freq <= 0:
        raise ValueError("reference frequency must be positive")
    if ref_freq >= fs / 2:
        raise AliasingError(
            f"reference {ref_freq:g} Hz is at or above Nyquist ({fs / 2:g} Hz)"
        )
    if cutoff is None:
        cutoff = ref_freq / 10.0
    if not 0.0 < cutoff < ref_freq / 2.0:
        raise ValueError(
            f"cutoff {cutoff:g} Hz must lie in (0, ref_freq/2) to reject "
            "the 2f component"
        )
    t = ts.t
    phase = 2.0 * math.pi * ref_freq * t + ref_phase
    sos = butter(order, cutoff, fs=fs, output="sos")
    ip = sosfilt(sos, 2.0 * ts.y * np.sin(phase))
    q = sosfilt(sos, 2.0 * ts.y * np.cos(phase))
    unit = ts.y_unit
    return (
        TimeSeries(ip, fs, t0=ts.t0, y_unit=unit),
        TimeSeries(q, fs, t0=ts.t0, y_unit=unit),
    )


def steady_mean(ts: TimeSeries, tail_fraction: float = 0.5) -> float:
    """Mean of the trailing fraction of a record (transient discarded)."""
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must be in (0, 1]")
    start = int(len(ts) * (1.0 - tail_fraction))
    return float(np.mean(ts.y[start:]))


def single_pole_response(cutoff: float) -> Callable:
    """Magnitude response of a one-pole low-pass, |R(0)| = 1."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")

    def response(f):
        return 1.0 / np.sqrt(1.0 + (np.asarray(f, dtype=float) / cutoff) ** 2)

    return response


@dataclass
class SensitivityCalibration:
    """How to turn a voltage ASD into field units.

    Either give the demodulated slope directly (volts per nT), or give
    the dispersive resonance peak-to-peak amplitude and HWHM so the
    slope is their ratio.  The frequency response defaults to a
    single-pole low-pass with the given cutoff.
    """

    slope_v_per_nt: float | None = None
    quadrature_pk_pk: float | None = None   # V
    resonance_hwhm_nt: float | None = None  # nT
    response: Callable | None = None
    response_cutoff_hz: float = 200.0

    def resolved_slope(self) -> float:
        if self.slope_v_per_nt is not None:
            if self.slope_v_per_nt <= 0:
                raise ValueError("slope must be positive")
            return self.slope_v_per_nt
        if self.quadrature_pk_pk is None or self.resonance_hwhm_nt is None:
            raise ValueError(
                "need either slope_v_per_nt or both quadrature_pk_pk and "
                "resonance_hwhm_nt"
            )
        if self.quadrature_pk_pk <= 0 or self.resonance_hwhm_nt <= 0:
            raise ValueError("amplitude and width must be positive")
        return self.quadrature_pk_pk / self.resonance_hwhm_nt

    def resolved_response(self) -> Callable:
        if self.response is not None:
            return self.response
        return single_pole_response(self.response_cutoff_hz)


def sensitivity(
    est: PsdEstimate,
    cal: SensitivityCalibration,
    band: tuple[float, float] | None = None,
) -> Spectrum:
    """Field-equivalent noise: ASD / (slope * |R(f)|), in fT per rt-Hz.

    Crops to ``band`` (Hz) first when given.  Any response magnitude
    below MIN_RESPONSE inside the evaluated range raises
    ZeroResponseError: dividing by it would be meaningless.
    """
    f = est.f
    asd = est.asd
    if band is not None:
        lo, hi = band
        keep = (f >= lo) & (f <= hi)
        if not np.any(keep):
            raise EmptyBandError(f"no PSD bins inside band {band}")
        f = f[keep]
        asd = asd[keep]
    slope = cal.resolved_slope()
    resp = np.abs(np.asarray(cal.resolved_response()(f), dtype=float))
    if np.any(resp < MIN_RESPONSE):
        worst = float(f[np.argmin(resp)])
        raise ZeroResponseError(
            f"|response| < {MIN_RESPONSE:g} at {worst:g} Hz; crop the band "
            "instead of dividing by zero"
        )
    field_nt = asd / (slope * resp)
    return Spectrum(f, field_nt * 1e6, x_unit="Hz", y_unit="fT/Hz^0.5")


def noise_floor(spec: Spectrum, band: tuple[float, float] = (10.0, 100.0)) -> float:
    """Median of a sensitivity spectrum inside the analysis band.

    The median ignores narrow spikes (line pickup, residual carrier), so
    it reports the broadband floor.
    """
    lo, hi = band
    if lo >= hi:
        raise ValueError("band low edge must be below high edge")
    keep = (spec.x >= lo) & (spec.x <= hi)
    if not np.any(keep):
        raise EmptyBandError(f"no points inside band ({lo:g}, {hi:g}) Hz")
    return float(np.median(spec.y[keep]))
