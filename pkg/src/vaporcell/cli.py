"""Command line driver: ``vaporcell <subcommand> [options]``.

Every subcommand writes its primary output files plus a flat
``key = value`` summary file, and echoes the summary to stdout.  All
physics defaults come from the packaged config file; a user config
(--config or VAPORCELL_CONFIG) overrides those, and explicit flags
override both.  Simulations take an explicit --seed (default pinned in
the config) so identical invocations produce byte-identical files.

Exit codes: 0 on success, 1 for usage or parameter errors, 2 when a
computation fails (non-convergent fit, degenerate data, bad input
file).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import atomic_data, hanle, lineshape, sas, sigproc, sns, thermal
from .config import get_float, get_int, get_str, load_config
from .errors import VaporcellError
from .fitkit import FitResult
from .records import Spectrum, TimeSeries, write_summary


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; the contract here is
    1 for usage errors, so error() raises instead."""

    def error(self, message):
        raise UsageError(message)


def _build_parser() -> Parser:
    parser = Parser(prog="vaporcell",
                    description="vapor-cell sensor simulation and analysis")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def cmd(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None,
                       help="key=value config file overriding packaged defaults")
        p.add_argument("--summary", default=None,
                       help="summary file path (default <command>_summary.txt)")
        p.add_argument("--quiet", action="store_true",
                       help="do not echo the summary to stdout")
        return p

    p = cmd("simulate-absorption", "synthesize a transmitted-power sweep")
    p.add_argument("--density", type=float, default=None, help="atoms per m^3")
    p.add_argument("--gamma-ghz", type=float, default=None,
                   help="Lorentzian FWHM of every component")
    p.add_argument("--center-shift-ghz", type=float, default=None)
    p.add_argument("--length-mm", type=float, default=None)
    p.add_argument("--doppler-fwhm-ghz", type=float, default=None)
    p.add_argument("--span-ghz", type=float, default=120.0)
    p.add_argument("--points", type=int, default=601)
    p.add_argument("--incident-power", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0,
                   help="relative multiplicative noise on transmitted power")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="absorption.csv")

    p = cmd("fit-absorption", "fit density/linewidth/shift to a sweep")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--incident-power", type=float, default=1.0,
                   help="used to convert a power sweep to optical depth")
    p.add_argument("--density-init", type=float, default=None)
    p.add_argument("--gamma-init-ghz", type=float, default=None)
    p.add_argument("--center-shift-init-ghz", type=float, default=None)
    p.add_argument("--length-mm", type=float, default=None)
    p.add_argument("--doppler-fwhm-ghz", type=float, default=None)

    p = cmd("aging-report", "linewidth drift report over repeated sweeps")
    p.add_argument("--in", dest="infile", required=True,
                   help="spectrum CSV with x=day, y=linewidth GHz")
    p.add_argument("--threshold", type=float, default=None,
                   help="pass criterion on |slope|, GHz per day")

    p = cmd("simulate-sas", "saturated-absorption spectrum with dips")
    p.add_argument("--temperature-k", type=float, default=None)
    p.add_argument("--dip-width-mhz", type=float, default=None)
    p.add_argument("--dip-depth", type=float, default=None)
    p.add_argument("--envelope-od", type=float, default=None)
    p.add_argument("--grid-min-ghz", type=float, default=None)
    p.add_argument("--grid-max-ghz", type=float, default=None)
    p.add_argument("--grid-step-ghz", type=float, default=None)
    p.add_argument("--out", default="sas.csv")

    p = cmd("simulate-sns", "stochastic spin-noise rotation record")
    p.add_argument("--field-ut", type=float, default=None)
    p.add_argument("--duration-s", type=float, default=None)
    p.add_argument("--sample-rate-hz", type=float, default=None)
    p.add_argument("--tau85-s", type=float, default=None)
    p.add_argument("--tau87-s", type=float, default=None)
    p.add_argument("--power-scale", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="spin_noise.csv")

    p = cmd("fit-sns", "Welch PSD of a record plus two-peak Lorentzian fit")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--segment-length", type=int, default=None)
    p.add_argument("--field-ut-guess", type=float, default=None)
    p.add_argument("--tau-guess-s", type=float, default=None)
    p.add_argument("--band-low-hz", type=float, default=None,
                   help="crop the PSD below this frequency before fitting")
    p.add_argument("--band-high-hz", type=float, default=None)
    p.add_argument("--out-psd", default="spin_noise_asd.csv")

    p = cmd("simulate-hanle", "synthetic zero-field resonance channel pair")
    p.add_argument("--a0", type=float, default=0.1)
    p.add_argument("--a1", type=float, default=0.1)
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--c1", type=float, default=0.0)
    p.add_argument("--bx0-nt", type=float, default=0.0)
    p.add_argument("--delta-b-nt", type=float, default=10.5)
    p.add_argument("--span-nt", type=float, default=200.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--noise", type=float, default=0.0,
                   help="additive noise, same units as the amplitudes")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-in-phase", default="hanle_in_phase.csv")
    p.add_argument("--out-quadrature", default="hanle_quadrature.csv")

    p = cmd("fit-hanle", "joint fit of both zero-field resonance channels")
    p.add_argument("--in-phase", dest="infile_ip", required=True)
    p.add_argument("--quadrature", dest="infile_q", required=True)
    p.add_argument("--slowing-factor", type=float, default=None)

    p = cmd("simulate-modulated", "Bloch dynamics under field modulation")
    p.add_argument("--pumping-rate", type=float, default=None)
    p.add_argument("--relaxation-rate", type=float, default=None)
    p.add_argument("--mod-freq-hz", type=float, default=None)
    p.add_argument("--mod-amp-nt", type=float, default=None)
    p.add_argument("--static-field-nt", type=float, default=0.0)
    p.add_argument("--duration-s", type=float, default=0.5)
    p.add_argument("--sample-rate-hz", type=float, default=200000.0)
    p.add_argument("--out", default="modulated.csv")

    p = cmd("demodulate", "dual-phase lock-in on a recorded time series")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--ref-freq-hz", type=float, required=True)
    p.add_argument("--ref-phase-rad", type=float, default=0.0)
    p.add_argument("--cutoff-hz", type=float, default=None)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--tail-fraction", type=float, default=0.5)
    p.add_argument("--out-in-phase", default="demod_in_phase.csv")
    p.add_argument("--out-quadrature", default="demod_quadrature.csv")

    p = cmd("calibrate-sensitivity", "field-equivalent noise from a record")
    p.add_argument("--timeseries", dest="infile", required=True,
                   help="demodulated output record (volts)")
    p.add_argument("--slope-v-per-nt", type=float, default=None)
    p.add_argument("--a-amp", type=float, default=None,
                   help="dispersive resonance peak-to-peak amplitude, V")
    p.add_argument("--delta-b", type=float, default=None,
                   help="zero-field resonance HWHM, nT")
    p.add_argument("--response-cutoff-hz", type=float, default=None)
    p.add_argument("--segment-length", type=int, default=None)
    p.add_argument("--band-low-hz", type=float, default=None)
    p.add_argument("--band-high-hz", type=float, default=None)
    p.add_argument("--out", default="sensitivity.csv")

    p = cmd("simulate-thermal", "closed-loop heater PID run")
    p.add_argument("--setpoint-k", type=float, default=None)
    p.add_argument("--duration-s", type=float, default=2000.0)
    p.add_argument("--dt-s", type=float, default=None)
    p.add_argument("--kp", type=float, default=None)
    p.add_argument("--ki", type=float, default=None)
    p.add_argument("--kd", type=float, default=None)
    p.add_argument("--sensor-noise-k", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="thermal.csv")
    p.add_argument("--out-power", default=None)

    p = cmd("fit-iv", "resistance from an I-V sweep")
    p.add_argument("--in", dest="infile", required=True,
                   help="spectrum CSV with x=current A, y=voltage V")
    p.add_argument("--affine", action="store_true",
                   help="allow a voltage offset instead of forcing V=RI")

    p = cmd("fit-residual-field", "stray field per heater current")
    p.add_argument("--in", dest="infile", required=True,
                   help="spectrum CSV with x=current mA, y=field nT")

    return parser


def _pick(value, cfg, key, cast=get_float):
    """Flag value if given, else the config default."""
    return value if value is not None else cast(cfg, key)


def _fit_common(result: FitResult) -> dict:
    return {
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "converged": result.converged,
        "termination_reason": result.termination_reason.value,
    }


def _rng(args, cfg) -> np.random.Generator:
    seed = _pick(getattr(args, "seed", None), cfg, "cli.seed", get_int)
    return np.random.default_rng(seed)


def _cmd_simulate_absorption(args, cfg) -> dict:
    params = lineshape.AbsorptionParams(
        density=_pick(args.density, cfg, "lineshape.default_density_m3"),
        linewidth=_pick(args.gamma_ghz, cfg, "lineshape.default_linewidth_ghz"),
        center_shift=_pick(args.center_shift_ghz, cfg,
                           "lineshape.default_center_shift_ghz"),
        path_length_mm=_pick(args.length_mm, cfg, "lineshape.path_length_mm"),
        oscillator_strength=get_float(cfg, "lineshape.oscillator_strength"),
        doppler_fwhm=args.doppler_fwhm_ghz,
    )
    lines = lineshape.weighted_d1_lines(registry=atomic_data.registry_from_config(cfg))
    if args.points < 2:
        raise ValueError("need at least 2 grid points")
    grid = params.center_shift + np.linspace(
        -args.span_ghz / 2, args.span_ghz / 2, args.points
    )
    spec = lineshape.simulate_absorption_spectrum(
        params, lines, grid,
        incident_power=args.incident_power,
        noise_fraction=args.noise,
        rng=_rng(args, cfg) if args.noise > 0 else None,
    )
    spec.to_csv(args.out)
    od = lineshape.optical_depth(grid, params, lines)
    return {
        "out": args.out,
        "points": len(spec),
        "density_m3": params.density,
        "linewidth_ghz": params.linewidth,
        "center_shift_ghz": params.center_shift,
        "peak_od": float(np.max(od)),
        "min_transmission_w": float(np.min(spec.y)),
    }


def _cmd_fit_absorption(args, cfg) -> dict:
    data = Spectrum.from_csv(args.infile)
    if data.y_unit != "OD":
        data = lineshape.optical_depth_spectrum(data, args.incident_power)
    initial = lineshape.AbsorptionParams(
        density=_pick(args.density_init, cfg, "lineshape.default_density_m3"),
        linewidth=_pick(args.gamma_init_ghz, cfg,
                        "lineshape.default_linewidth_ghz"),
        center_shift=_pick(args.center_shift_init_ghz, cfg,
                           "lineshape.default_center_shift_ghz"),
        path_length_mm=_pick(args.length_mm, cfg, "lineshape.path_length_mm"),
        oscillator_strength=get_float(cfg, "lineshape.oscillator_strength"),
        doppler_fwhm=args.doppler_fwhm_ghz,
    )
    lines = lineshape.weighted_d1_lines(registry=atomic_data.registry_from_config(cfg))
    result = lineshape.fit_absorption(data, initial, lines)
    buffer = atomic_data.buffer_gas_from_config(cfg)
    density_amg = lineshape.buffer_density_from_linewidth(result.params[1], buffer)
    se = result.stderr
    return {
        "in": args.infile,
        "density_m3": result.params[0],
        "density_stderr_m3": se[0],
        "linewidth_ghz": result.params[1],
        "linewidth_stderr_ghz": se[1],
        "center_shift_ghz": result.params[2],
        "center_shift_stderr_ghz": se[2],
        "buffer_density_amagat": density_amg,
        **_fit_common(result),
    }


def _cmd_aging_report(args, cfg) -> dict:
    data = Spectrum.from_csv(args.infile)
    threshold = _pick(args.threshold, cfg, "lineshape.drift_threshold_ghz_per_day")
    report = lineshape.linewidth_drift_report(data.x, data.y, threshold)
    return {
        "in": args.infile,
        "n_points": report.n_points,
        "slope_ghz_per_day": report.slope,
        "slope_stderr_ghz_per_day": report.slope_stderr,
        "intercept_ghz": report.intercept,
        "max_abs_deviation_ghz": report.max_abs_deviation,
        "threshold_ghz_per_day": report.threshold,
        "passed": report.passed,
    }


def _cmd_simulate_sas(args, cfg) -> dict:
    sas_cfg = sas.SasConfig(
        temperature=_pick(args.temperature_k, cfg, "sas.temperature_k"),
        lamb_dip_width_mhz=_pick(args.dip_width_mhz, cfg, "sas.lamb_dip_width_mhz"),
        lamb_dip_depth=_pick(args.dip_depth, cfg, "sas.lamb_dip_depth"),
        envelope_peak_od=_pick(args.envelope_od, cfg, "sas.envelope_peak_od"),
        grid_min=_pick(args.grid_min_ghz, cfg, "sas.grid_min_ghz"),
        grid_max=_pick(args.grid_max_ghz, cfg, "sas.grid_max_ghz"),
        grid_step=_pick(args.grid_step_ghz, cfg, "sas.grid_step_ghz"),
    )
    registry = atomic_data.registry_from_config(cfg)
    spec = sas.sas_spectrum(sas_cfg, registry)
    spec.to_csv(args.out)
    summary = {"out": args.out, "points": len(spec)}
    idx = 0
    for name in sorted(registry):
        iso = registry[name]
        summary[f"doppler_fwhm_ghz_{name.lower()}"] = sas.doppler_fwhm_ghz(
            iso, sas_cfg.temperature
        )
        for feat in sas.sas_feature_frequencies(iso):
            idx += 1
            excited = "+".join(str(f) for f in feat.excited_f)
            summary[f"feature_{idx:02d}"] = (
                f"{feat.offset:.6f} GHz {feat.isotope} Fg={feat.ground_f} "
                f"Fe={excited} {feat.kind}"
            )
    summary["n_features"] = idx
    return summary


def _cmd_simulate_sns(args, cfg) -> dict:
    registry = atomic_data.registry_from_config(cfg)
    field = _pick(args.field_ut, cfg, "sns.field_ut")
    taus = {
        "Rb85": _pick(args.tau85_s, cfg, "sns.tau85_s"),
        "Rb87": _pick(args.tau87_s, cfg, "sns.tau87_s"),
    }
    ts = sns.simulate_spin_noise(
        field_ut=field,
        duration=_pick(args.duration_s, cfg, "sns.duration_s"),
        sample_rate=_pick(args.sample_rate_hz, cfg, "sns.sample_rate_hz"),
        correlation_times=taus,
        rng=_rng(args, cfg),
        power_scale=_pick(args.power_scale, cfg, "sns.power_scale"),
        registry=registry,
    )
    ts.to_csv(args.out)
    return {
        "out": args.out,
        "samples": len(ts),
        "sample_rate_hz": ts.sample_rate,
        "field_ut": field,
        "larmor_rb85_hz": sns.larmor_frequency(registry["Rb85"], field),
        "larmor_rb87_hz": sns.larmor_frequency(registry["Rb87"], field),
    }


def _cmd_fit_sns(args, cfg) -> dict:
    ts = TimeSeries.from_csv(args.infile)
    est = sigproc.welch_asd(
        ts, segment_length=_pick(args.segment_length, cfg,
                                 "sigproc.segment_length", get_int)
    )
    est.to_csv(args.out_psd)
    psd = est.power_spectrum()
    lo = args.band_low_hz
    hi = args.band_high_hz
    if lo is not None or hi is not None:
        keep = np.ones(len(psd), dtype=bool)
        if lo is not None:
            keep &= psd.x >= lo
        if hi is not None:
            keep &= psd.x <= hi
        psd = Spectrum(psd.x[keep], psd.y[keep], psd.x_unit, psd.y_unit)
    registry = atomic_data.registry_from_config(cfg)
    field = _pick(args.field_ut_guess, cfg, "sns.field_ut")
    tau = _pick(args.tau_guess_s, cfg, "sns.tau85_s")
    hwhm0 = 1.0 / (2.0 * np.pi * tau)
    bg0 = float(np.median(psd.y))
    area0 = float(np.var(ts.y))
    initial = sns.SnsModel(
        peaks=(
            sns.SnsPeak(sns.larmor_frequency(registry["Rb85"], field), hwhm0,
                        area0 * registry["Rb85"].abundance),
            sns.SnsPeak(sns.larmor_frequency(registry["Rb87"], field), hwhm0,
                        area0 * registry["Rb87"].abundance),
        ),
        background=bg0,
    )
    result = sns.fit_sns(psd, initial)
    model = sns.sns_model_from_fit(result)
    pk85, pk87 = sorted(model.peaks, key=lambda pk: pk.frequency)
    return {
        "in": args.infile,
        "out_psd": args.out_psd,
        "background": model.background,
        "peak1_freq_hz": pk85.frequency,
        "peak1_hwhm_hz": pk85.hwhm,
        "peak1_area": pk85.area,
        "peak2_freq_hz": pk87.frequency,
        "peak2_hwhm_hz": pk87.hwhm,
        "peak2_area": pk87.area,
        "freq_ratio": pk87.frequency / pk85.frequency,
        "height_ratio": pk85.height / pk87.height,
        **_fit_common(result),
    }


def _cmd_simulate_hanle(args, cfg) -> dict:
    params = hanle.HanleParams(
        a0=args.a0, a1=args.a1, c0=args.c0, c1=args.c1,
        bx0=args.bx0_nt, delta_b=args.delta_b_nt,
    )
    if args.points < 6:
        raise ValueError("need at least 6 sweep points")
    bx = args.bx0_nt + np.linspace(-args.span_nt / 2, args.span_nt / 2, args.points)
    ip, quad = hanle.simulate_zero_field_pair(
        params, bx, noise=args.noise,
        rng=_rng(args, cfg) if args.noise > 0 else None,
    )
    ip.to_csv(args.out_in_phase)
    quad.to_csv(args.out_quadrature)
    return {
        "out_in_phase": args.out_in_phase,
        "out_quadrature": args.out_quadrature,
        "points": len(ip),
        "delta_b_nt": params.delta_b,
        "bx0_nt": params.bx0,
        "quadrature_pkpk": params.quadrature_peak_to_peak,
    }


def _cmd_fit_hanle(args, cfg) -> dict:
    ip = Spectrum.from_csv(args.infile_ip)
    quad = Spectrum.from_csv(args.infile_q)
    initial = hanle.estimate_zero_field_initial(ip, quad)
    result = hanle.fit_zero_field_resonance(ip, quad, initial)
    fitted = hanle.hanle_params_from_fit(result)
    gyro = get_float(cfg, "hanle.gyro_rad_per_s_nt")
    slowing = _pick(args.slowing_factor, cfg, "hanle.slowing_factor")
    rate = hanle.relaxation_from_linewidth(fitted.delta_b, gyro, slowing)
    se = result.stderr
    return {
        "in_phase": args.infile_ip,
        "quadrature": args.infile_q,
        "a0": fitted.a0,
        "a1": fitted.a1,
        "c0": fitted.c0,
        "c1": fitted.c1,
        "bx0_nt": fitted.bx0,
        "bx0_stderr_nt": se[4],
        "delta_b_nt": fitted.delta_b,
        "delta_b_stderr_nt": se[5],
        "quadrature_pkpk": fitted.quadrature_peak_to_peak,
        "center_slope_per_nt": fitted.center_slope,
        "relaxation_rate_s": rate,
        **_fit_common(result),
    }


def _cmd_simulate_modulated(args, cfg) -> dict:
    bloch_cfg = hanle.BlochConfig(
        pumping_rate=_pick(args.pumping_rate, cfg, "bloch.pumping_rate_s"),
        relaxation_rate=_pick(args.relaxation_rate, cfg, "bloch.relaxation_rate_s"),
        duration=args.duration_s,
        sample_rate=args.sample_rate_hz,
        gyro=get_float(cfg, "hanle.gyro_rad_per_s_nt"),
    )
    mod_freq = _pick(args.mod_freq_hz, cfg, "bloch.modulation_freq_hz")
    mod_amp = _pick(args.mod_amp_nt, cfg, "bloch.modulation_amp_nt")
    power = hanle.modulated_response(bloch_cfg, mod_freq, mod_amp,
                                     static_field=args.static_field_nt)
    power.to_csv(args.out)
    return {
        "out": args.out,
        "samples": len(power),
        "mod_freq_hz": mod_freq,
        "mod_amp_nt": mod_amp,
        "static_field_nt": args.static_field_nt,
        "pumping_rate_s": bloch_cfg.pumping_rate,
        "relaxation_rate_s": bloch_cfg.relaxation_rate,
    }


def _cmd_demodulate(args, cfg) -> dict:
    ts = TimeSeries.from_csv(args.infile)
    ip, quad = sigproc.lock_in(
        ts, args.ref_freq_hz, ref_phase=args.ref_phase_rad,
        cutoff=args.cutoff_hz, order=args.order,
    )
    ip.to_csv(args.out_in_phase)
    quad.to_csv(args.out_quadrature)
    return {
        "in": args.infile,
        "out_in_phase": args.out_in_phase,
        "out_quadrature": args.out_quadrature,
        "ref_freq_hz": args.ref_freq_hz,
        "in_phase_mean": sigproc.steady_mean(ip, args.tail_fraction),
        "quadrature_mean": sigproc.steady_mean(quad, args.tail_fraction),
    }


def _cmd_calibrate_sensitivity(args, cfg) -> dict:
    ts = TimeSeries.from_csv(args.infile)
    est = sigproc.welch_asd(
        ts, segment_length=_pick(args.segment_length, cfg,
                                 "sigproc.segment_length", get_int)
    )
    cal = sigproc.SensitivityCalibration(
        slope_v_per_nt=args.slope_v_per_nt,
        quadrature_pk_pk=args.a_amp,
        resonance_hwhm_nt=args.delta_b,
        response_cutoff_hz=_pick(args.response_cutoff_hz, cfg,
                                 "sigproc.response_cutoff_hz"),
    )
    band = (
        _pick(args.band_low_hz, cfg, "sigproc.band_low_hz"),
        _pick(args.band_high_hz, cfg, "sigproc.band_high_hz"),
    )
    # crop to the analysis band before dividing by the response so a
    # record sampled far above the filter corner cannot hit dead bins
    spec = sigproc.sensitivity(est, cal, band=band)
    spec.to_csv(args.out)
    floor = sigproc.noise_floor(spec, band)
    return {
        "in": args.infile,
        "out": args.out,
        "slope_v_per_nt": cal.resolved_slope(),
        "band_low_hz": band[0],
        "band_high_hz": band[1],
        "noise_floor_ft_rthz": floor,
    }


def _cmd_simulate_thermal(args, cfg) -> dict:
    plant = thermal.ThermalPlant(
        time_constant=get_float(cfg, "thermal.time_constant_s"),
        gain=get_float(cfg, "thermal.gain_k_per_w"),
        ambient=get_float(cfg, "thermal.ambient_k"),
        sensor_noise=_pick(args.sensor_noise_k, cfg, "thermal.sensor_noise_k"),
        heater_resistance=get_float(cfg, "thermal.heater_resistance_ohm"),
        sensor_resistance=get_float(cfg, "thermal.sensor_resistance_ohm"),
    )
    gains = thermal.PidGains(
        kp=_pick(args.kp, cfg, "thermal.pid_kp"),
        ki=_pick(args.ki, cfg, "thermal.pid_ki"),
        kd=_pick(args.kd, cfg, "thermal.pid_kd"),
        output_max=get_float(cfg, "thermal.max_power_w"),
    )
    setpoint = _pick(args.setpoint_k, cfg, "thermal.setpoint_k")
    temp, power = thermal.simulate_pid(
        plant, gains, setpoint,
        duration=args.duration_s,
        dt=_pick(args.dt_s, cfg, "thermal.dt_s"),
        rng=_rng(args, cfg),
    )
    temp.to_csv(args.out)
    if args.out_power:
        power.to_csv(args.out_power)
    settle = thermal.settling_time(temp, setpoint, tolerance=0.05)
    tail = temp.y[len(temp) // 2:]
    return {
        "out": args.out,
        "setpoint_k": setpoint,
        "settling_time_s": settle,
        "final_temperature_k": float(temp.y[-1]),
        "tail_mean_error_k": float(np.mean(tail - setpoint)),
        "tail_max_error_k": float(np.max(np.abs(tail - setpoint))),
        "max_power_w": float(np.max(power.y)),
    }


def _cmd_fit_iv(args, cfg) -> dict:
    data = Spectrum.from_csv(args.infile)
    fit = thermal.resistance_from_iv(data.x, data.y,
                                     through_origin=not args.affine)
    return {
        "in": args.infile,
        "resistance_ohm": fit.slope,
        "resistance_stderr_ohm": fit.slope_stderr,
        "offset_v": fit.intercept,
        "n_points": fit.n_points,
    }


def _cmd_fit_residual_field(args, cfg) -> dict:
    data = Spectrum.from_csv(args.infile)
    fit = thermal.fit_residual_field(data.x, data.y)
    return {
        "in": args.infile,
        "coefficient_nt_per_ma": fit.slope,
        "coefficient_stderr_nt_per_ma": fit.slope_stderr,
        "n_points": fit.n_points,
    }


_HANDLERS = {
    "simulate-absorption": _cmd_simulate_absorption,
    "fit-absorption": _cmd_fit_absorption,
    "aging-report": _cmd_aging_report,
    "simulate-sas": _cmd_simulate_sas,
    "simulate-sns": _cmd_simulate_sns,
    "fit-sns": _cmd_fit_sns,
    "simulate-hanle": _cmd_simulate_hanle,
    "fit-hanle": _cmd_fit_hanle,
    "simulate-modulated": _cmd_simulate_modulated,
    "demodulate": _cmd_demodulate,
    "calibrate-sensitivity": _cmd_calibrate_sensitivity,
    "simulate-thermal": _cmd_simulate_thermal,
    "fit-iv": _cmd_fit_iv,
    "fit-residual-field": _cmd_fit_residual_field,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = load_config(args.config)
        summary = _HANDLERS[args.command](args, cfg)
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (VaporcellError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    summary_path = args.summary or f"{args.command.replace('-', '_')}_summary.txt"
    write_summary(summary_path, summary)
    if not args.quiet:
        for key, value in summary.items():
            print(f"{key} = {value}")
        print(f"summary written to {summary_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
