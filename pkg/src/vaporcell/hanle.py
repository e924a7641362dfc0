"""Zero-field level-crossing resonances and spin dynamics.

A transversely pumped cell near zero field shows an absorptive
resonance in the demodulated in-phase channel,

    v_ip(Bx)   = a0 * dB^2 / ((Bx - bx0)^2 + dB^2) + c0,

and a dispersive one in the quadrature channel,

    v_quad(Bx) = a1 * (Bx - bx0) / ((Bx - bx0)^2 + dB^2) + c1.

Here a0 and a1 multiply the resonant terms and c0, c1 are additive
backgrounds.  The quadrature curve peaks at bx0 +/- dB with values
c1 +/- a1/(2 dB), so its peak-to-peak amplitude is a1/dB and its slope
at center is a1/dB^2.

The same module integrates the spin-1/2 Bloch equation with optical
pumping so the lineshapes above can be generated from first principles:

    dS/dt = gyro * (S x B) + R_op * (z/2 - S) - R_rel * S
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import GridMismatchError, NonConvergenceError, StepSizeError
from .fitkit import FitResult, least_squares
from .records import Spectrum, TimeSeries

# Electron gyromagnetic ratio, rad/s per nT (28.024 Hz per nT).
ELECTRON_GYRO_RAD_PER_S_NT = 2.0 * math.pi * 28.024

PARAM_ORDER = ("a0", "a1", "c0", "c1", "bx0", "delta_b")


@dataclass(frozen=True)
class HanleParams:
    """Joint parameters of the in-phase and quadrature resonances."""

    a0: float           # in-phase resonance amplitude
    a1: float           # quadrature dispersive amplitude
    c0: float           # in-phase background offset
    c1: float           # quadrature background offset
    bx0: float          # resonance center, nT
    delta_b: float      # half width at half maximum, nT

    def __post_init__(self):
        if self.delta_b <= 0:
            raise ValueError("delta_b must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.c0, self.c1,
                         self.bx0, self.delta_b])

    @classmethod
    def from_array(cls, p) -> "HanleParams":
        a0, a1, c0, c1, bx0, db = (float(v) for v in p)
        return cls(a0, a1, c0, c1, bx0, abs(db))

    @property
    def quadrature_peak_to_peak(self) -> float:
        return self.a1 / self.delta_b

    @property
    def center_slope(self) -> float:
        """Slope of the quadrature curve at Bx = bx0, per nT."""
        return self.a1 / self.delta_b**2


def in_phase(bx, params: HanleParams) -> np.ndarray:
    u = np.asarray(bx, dtype=float) - params.bx0
    return params.a0 * params.delta_b**2 / (u * u + params.delta_b**2) + params.c0


def out_of_phase(bx, params: HanleParams) -> np.ndarray:
    u = np.asarray(bx, dtype=float) - params.bx0
    return params.a1 * u / (u * u + params.delta_b**2) + params.c1


def in_phase_model(p, bx) -> np.ndarray:
    """Array-parameter form of in_phase, ordered as PARAM_ORDER."""
    a0, _, c0, _, bx0, db = p
    u = np.asarray(bx, dtype=float) - bx0
    return a0 * db * db / (u * u + db * db) + c0


def out_of_phase_model(p, bx) -> np.ndarray:
    _, a1, _, c1, bx0, db = p
    u = np.asarray(bx, dtype=float) - bx0
    return a1 * u / (u * u + db * db) + c1


def in_phase_jacobian(p, bx) -> np.ndarray:
    a0, _, _, _, bx0, db = p
    u = np.asarray(bx, dtype=float) - bx0
    denom = u * u + db * db
    J = np.zeros((u.size, 6))
    J[:, 0] = db * db / denom
    J[:, 2] = 1.0
    J[:, 4] = 2.0 * a0 * db * db * u / denom**2
    J[:, 5] = 2.0 * a0 * db * u * u / denom**2
    return J


def out_of_phase_jacobian(p, bx) -> np.ndarray:
    _, a1, _, _, bx0, db = p
    u = np.asarray(bx, dtype=float) - bx0
    denom = u * u + db * db
    J = np.zeros((u.size, 6))
    J[:, 1] = u / denom
    J[:, 3] = 1.0
    J[:, 4] = a1 * (u * u - db * db) / denom**2
    J[:, 5] = -2.0 * a1 * u * db / denom**2
    return J


def simulate_zero_field_pair(
    params: HanleParams,
    bx,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[Spectrum, Spectrum]:
    """Synthetic in-phase/quadrature sweeps with optional additive noise."""
    bx = np.asarray(bx, dtype=float)
    y_ip = in_phase(bx, params)
    y_q = out_of_phase(bx, params)
    if noise > 0.0:
        if rng is None:
            raise ValueError("noise requested but no random generator given")
        y_ip = y_ip + noise * rng.standard_normal(bx.size)
        y_q = y_q + noise * rng.standard_normal(bx.size)
    return (
        Spectrum(bx, y_ip, x_unit="nT", y_unit="V"),
        Spectrum(bx, y_q, x_unit="nT", y_unit="V"),
    )


def estimate_zero_field_initial(
    in_phase_data: Spectrum, quadrature_data: Spectrum
) -> HanleParams:
    """Rough starting point for the joint fit, read off the raw sweeps.

    Backgrounds come from the sweep endpoints (assumed in the wings),
    the center from the dispersive extrema, and the width from their
    separation.  Only meant to land inside the fit's basin of
    attraction, not to be accurate.
    """
    x = in_phase_data.x
    y_ip = in_phase_data.y
    y_q = quadrature_data.y
    span = float(x[-1] - x[0]) if x.size > 1 else 1.0
    c0 = 0.5 * (y_ip[0] + y_ip[-1])
    idx = int(np.argmax(np.abs(y_ip - c0)))
    a0 = float(y_ip[idx] - c0)
    c1 = 0.5 * (y_q[0] + y_q[-1])
    imax = int(np.argmax(y_q))
    imin = int(np.argmin(y_q))
    pkpk = float(y_q[imax] - y_q[imin])
    half_sep = abs(x[imax] - x[imin]) / 2.0
    if pkpk > 0 and half_sep > 0:
        delta_b = half_sep
        bx0 = 0.5 * (x[imax] + x[imin])
        a1 = pkpk * delta_b * (1.0 if x[imax] > x[imin] else -1.0)
    else:
        delta_b = span / 8.0 if span > 0 else 1.0
        bx0 = float(x[idx])
        a1 = 0.0
    return HanleParams(a0=a0, a1=a1, c0=float(c0), c1=float(c1),
                       bx0=float(bx0), delta_b=float(delta_b))


def fit_zero_field_resonance(
    in_phase_data: Spectrum,
    quadrature_data: Spectrum,
    initial: HanleParams,
    max_iter: int = 200,
) -> FitResult:
    """Joint fit of both channels sharing center and width.

    Both spectra must be sampled on the identical field axis.  Returned
    parameters follow PARAM_ORDER with delta_b folded positive (the
    model is even in its sign).  If both amplitudes come out consistent
    with zero the fit warns: the sweep saw no resonance and the width is
    then meaningless.
    """
    if not np.array_equal(in_phase_data.x, quadrature_data.x):
        raise GridMismatchError(
            "in-phase and quadrature sweeps use different field axes"
        )
    bx = in_phase_data.x
    if bx.size < 6:
        raise ValueError(f"need at least 6 sweep points, got {bx.size}")
    y = np.concatenate([in_phase_data.y, quadrature_data.y])
    # Normalize voltages so the absolute gradient test in the engine
    # sees order-one numbers regardless of signal level.
    scale = max(float(np.max(np.abs(y))), 1e-30)
    y_n = y / scale

    def model(p, x):
        return np.concatenate([in_phase_model(p, x), out_of_phase_model(p, x)])

    def jacobian(p, x):
        return np.vstack([in_phase_jacobian(p, x), out_of_phase_jacobian(p, x)])

    p0 = initial.as_array()
    p0[[0, 1, 2, 3]] /= scale
    result = least_squares(model, bx, y_n, p0, jacobian=jacobian,
                           max_iter=max_iter)
    rescale = np.array([scale, scale, scale, scale, 1.0, 1.0])
    result.params = result.params * rescale
    result.covariance = result.covariance * np.outer(rescale, rescale)
    result.params[5] = abs(result.params[5])
    se = result.stderr
    amplitudes_zero = (
        abs(result.params[0]) < 3.0 * se[0]
        and abs(result.params[1]) < 3.0 * se[1]
    )
    if amplitudes_zero:
        # A featureless sweep leaves center and width unconstrained, so
        # the engine may wander to the iteration cap; the advisory is
        # the meaningful outcome there, not the non-convergence error.
        warnings.warn(
            "both resonance amplitudes are consistent with zero; the fitted "
            "width is not meaningful",
            stacklevel=2,
        )
    elif not result.converged:
        raise NonConvergenceError(
            f"zero-field resonance fit stopped after {result.iterations} "
            f"iterations ({result.termination_reason.value})",
            result=result,
        )
    return result


def hanle_params_from_fit(result: FitResult) -> HanleParams:
    return HanleParams.from_array(result.params)


def relaxation_from_linewidth(
    delta_b: float,
    gyro: float = ELECTRON_GYRO_RAD_PER_S_NT,
    slowing_factor: float = 1.0,
) -> float:
    """Total spin relaxation rate (s^-1) from a field HWHM (nT).

    slowing_factor rescales the bare gyromagnetic ratio when the
    hyperfine coupling slows the effective precession; 1 leaves the
    electron value untouched.
    """
    if delta_b <= 0:
        raise ValueError("delta_b must be positive")
    if slowing_factor <= 0:
        raise ValueError("slowing factor must be positive")
    return gyro * delta_b / slowing_factor


FieldWaveform = Callable[[float], tuple[float, float, float]]


def _zero_field(t: float) -> tuple[float, float, float]:
    return (0.0, 0.0, 0.0)


@dataclass
class BlochConfig:
    """Settings for the optically pumped Bloch integrator."""

    pumping_rate: float                 # R_op, s^-1 (>= 0)
    relaxation_rate: float              # R_rel, s^-1 (>= 0)
    duration: float                     # s
    sample_rate: float                  # Hz; also the integrator step
    gyro: float = ELECTRON_GYRO_RAD_PER_S_NT   # rad/s per nT
    field: FieldWaveform = _zero_field  # t -> (Bx, By, Bz) in nT
    initial_spin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    max_field_frequency: float = 0.0    # declared by the caller, Hz

    def __post_init__(self):
        if self.pumping_rate < 0 or self.relaxation_rate < 0:
            raise ValueError("pumping and relaxation rates cannot be negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        if self.max_field_frequency > 0 and (
            self.sample_rate <= 20.0 * self.max_field_frequency
        ):
            raise StepSizeError(
                f"sample rate {self.sample_rate:g} Hz must exceed 20x the "
                f"declared field frequency {self.max_field_frequency:g} Hz"
            )


def bloch_simulate(cfg: BlochConfig) -> tuple[TimeSeries, TimeSeries]:
    """Fixed-step RK4 integration of the pumped Bloch equation.

    Returns (spin_z, power_proxy); the proxy is the affine map 1 - 2*Sz,
    so full pumping (Sz = 1/2) gives zero absorption-proxy signal.
    """
    dt = 1.0 / cfg.sample_rate
    n_steps = int(round(cfg.duration * cfg.sample_rate))
    if n_steps < 1:
        raise ValueError("duration shorter than one sample period")
    gyro = cfg.gyro
    r_op = cfg.pumping_rate
    r_tot = cfg.pumping_rate + cfg.relaxation_rate
    pump = 0.5 * r_op
    field = cfg.field

    def deriv(t, sx, sy, sz):
        bx, by, bz = field(t)
        wx, wy, wz = gyro * bx, gyro * by, gyro * bz
        return (
            sy * wz - sz * wy - r_tot * sx,
            sz * wx - sx * wz - r_tot * sy,
            sx * wy - sy * wx - r_tot * sz + pump,
        )

    sx, sy, sz = (float(v) for v in cfg.initial_spin)
    out = np.empty(n_steps + 1)
    out[0] = sz
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(n_steps):
        t = k * dt
        ax, ay, az = deriv(t, sx, sy, sz)
        bx_, by_, bz_ = deriv(t + half, sx + half * ax, sy + half * ay,
                              sz + half * az)
        cx, cy, cz = deriv(t + half, sx + half * bx_, sy + half * by_,
                           sz + half * bz_)
        dx, dy, dz = deriv(t + dt, sx + dt * cx, sy + dt * cy, sz + dt * cz)
        sx += sixth * (ax + 2.0 * (bx_ + cx) + dx)
        sy += sixth * (ay + 2.0 * (by_ + cy) + dy)
        sz += sixth * (az + 2.0 * (bz_ + cz) + dz)
        out[k + 1] = sz
    spin = TimeSeries(out, cfg.sample_rate, y_unit="spin")
    power = TimeSeries(1.0 - 2.0 * out, cfg.sample_rate, y_unit="arb")
    return spin, power


def modulated_response(
    cfg: BlochConfig,
    mod_freq: float,
    mod_amp: float,
    static_field: float = 0.0,
) -> TimeSeries:
    """Power proxy with Bx(t) = static_field + mod_amp*sin(2 pi f t).

    Replaces any waveform already in cfg and declares the modulation
    frequency so the step-size check applies.
    """
    if mod_freq <= 0:
        raise ValueError("modulation frequency must be positive")
    two_pi_f = 2.0 * math.pi * mod_freq

    def field(t: float) -> tuple[float, float, float]:
        return (static_field + mod_amp * math.sin(two_pi_f * t), 0.0, 0.0)

    cfg = replace(cfg, field=field,
                  max_field_frequency=max(cfg.max_field_frequency, mod_freq))
    _, power = bloch_simulate(cfg)
    return power
