"""Saturated-absorption feature positions and synthetic spectra.

Crossover positions have an exact in-test oracle: the arithmetic mean
of the parent transition offsets, recomputed here from the transition
list.  Doppler widths are recomputed from scipy constants.  Peak
counting uses scipy.signal.find_peaks as an independent detector.
"""

import math

import numpy as np
import pytest
from scipy import constants
from scipy.signal import find_peaks

from vaporcell import sas
from vaporcell.atomic_data import RB85, RB87, TransitionLine, d1_transition_lines
from vaporcell.errors import GridTooCoarseError
from vaporcell.sas import (
    SasConfig,
    doppler_fwhm_ghz,
    sas_feature_frequencies,
    sas_spectrum,
)


@pytest.mark.parametrize("isotope", [RB85, RB87])
def test_crossovers_sit_at_exact_means(isotope):
    lines = {(l.ground_f, l.excited_f): l.offset for l in d1_transition_lines(isotope)}
    for feat in sas_feature_frequencies(isotope):
        if feat.kind != "crossover":
            continue
        fa, fb = feat.excited_f
        mean = (lines[(feat.ground_f, fa)] + lines[(feat.ground_f, fb)]) / 2.0
        assert feat.offset == mean   # bitwise: same IEEE expression


@pytest.mark.parametrize("isotope", [RB85, RB87])
def test_feature_census(isotope):
    feats = sas_feature_frequencies(isotope)
    kinds = [f.kind for f in feats]
    assert kinds.count("dip") == 4
    assert kinds.count("crossover") == 2
    offsets = [f.offset for f in feats]
    assert offsets == sorted(offsets)


def test_rb87_crossover_half_splitting_above_lower_dip():
    feats = [f for f in sas_feature_frequencies(RB87) if f.ground_f == 2]
    dips = {f.excited_f[0]: f.offset for f in feats if f.kind == "dip"}
    cross = [f for f in feats if f.kind == "crossover"][0]
    gap = cross.offset - dips[1]
    assert gap == pytest.approx(RB87.excited_splitting / 2.0, rel=1e-12)
    assert gap == pytest.approx(0.40725, abs=5e-5)


def test_rb85_crossover_spacing_is_half_excited_splitting():
    feats = [f for f in sas_feature_frequencies(RB85) if f.ground_f == 3]
    dips = sorted(f.offset for f in feats if f.kind == "dip")
    cross = [f for f in feats if f.kind == "crossover"][0]
    assert cross.offset - dips[0] == pytest.approx(
        RB85.excited_splitting / 2.0, rel=1e-12
    )


def test_degenerate_pair_emits_no_crossover(monkeypatch):
    # Two transitions at the same offset: the mean coincides with the
    # dip, so no separate crossover should appear.
    def fake_lines(isotope):
        return (
            TransitionLine(isotope.name, 2, 1, offset=1.0, strength=0.5),
            TransitionLine(isotope.name, 2, 2, offset=1.0, strength=0.5),
        )

    monkeypatch.setattr(sas, "d1_transition_lines", fake_lines)
    feats = sas_feature_frequencies(RB87)
    assert all(f.kind == "dip" for f in feats)
    assert len(feats) == 2


def test_doppler_width_from_first_principles():
    for iso, temp in ((RB87, 294.15), (RB85, 294.15), (RB87, 400.0)):
        nu0_ghz = 377.107e3
        m_kg = iso.mass_amu * constants.physical_constants["atomic mass constant"][0]
        oracle = nu0_ghz * math.sqrt(
            8.0 * math.log(2.0) * constants.k * temp / (m_kg * constants.c**2)
        )
        assert doppler_fwhm_ghz(iso, temp) == pytest.approx(oracle, rel=1e-12)
    # room-temperature magnitude and isotope ordering
    w87 = doppler_fwhm_ghz(RB87, 294.15)
    w85 = doppler_fwhm_ghz(RB85, 294.15)
    assert 0.45 < w87 < 0.55
    assert w85 > w87   # lighter atom, wider Doppler profile


def test_doppler_width_scales_as_sqrt_temperature():
    w = doppler_fwhm_ghz(RB87, 300.0)
    assert doppler_fwhm_ghz(RB87, 1200.0) == pytest.approx(2.0 * w, rel=1e-12)
    with pytest.raises(ValueError):
        doppler_fwhm_ghz(RB87, 0.0)


def test_zero_depth_gives_pure_doppler_envelope():
    cfg = SasConfig(isotope_weights={"Rb87": 1.0}, lamb_dip_depth=0.0)
    spec = sas_spectrum(cfg)
    nu = spec.x
    fwhm = doppler_fwhm_ghz(RB87, cfg.temperature)
    env = np.zeros_like(nu)
    for line in d1_transition_lines(RB87):
        d = nu - line.offset
        env += line.strength * np.exp(-4.0 * math.log(2.0) * d * d / fwhm**2)
    oracle = cfg.incident_power * np.exp(-cfg.envelope_peak_od * env)
    np.testing.assert_allclose(spec.y, oracle, rtol=1e-12)


def test_between_features_curve_follows_envelope():
    flat = sas_spectrum(SasConfig(lamb_dip_depth=0.0))
    carved = sas_spectrum(SasConfig(lamb_dip_depth=0.3))
    feats = [
        f.offset
        for iso in (RB85, RB87)
        for f in sas_feature_frequencies(iso)
    ]
    far = np.all(
        np.abs(flat.x[:, None] - np.asarray(feats)[None, :]) > 0.5, axis=1
    )
    assert far.sum() > 1000
    np.testing.assert_allclose(carved.y[far], flat.y[far], rtol=1e-3)


def test_single_ground_state_window_counts_two_dips_one_crossover():
    cfg = SasConfig(
        isotope_weights={"Rb87": 1.0},
        grid_min=-5.0,
        grid_max=0.0,
        grid_step=0.002,
    )
    spec = sas_spectrum(cfg)
    idx, _ = find_peaks(spec.y, prominence=0.003)
    expected = sorted(
        f.offset for f in sas_feature_frequencies(RB87) if f.ground_f == 2
    )
    assert len(idx) == 3, f"expected 3 transmission peaks, found {len(idx)}"
    found = spec.x[idx]
    for want, got in zip(expected, sorted(found)):
        assert abs(got - want) <= cfg.grid_step


def test_natural_rb_has_four_doppler_valleys():
    cfg = SasConfig(lamb_dip_depth=0.0)
    spec = sas_spectrum(cfg)
    od = -np.log(spec.y / cfg.incident_power)
    idx, _ = find_peaks(od, prominence=0.05)
    assert len(idx) == 4, f"expected 4 absorption groups, found {len(idx)}"
    centers = sorted(spec.x[idx])
    # group ordering: Rb87 Fg=2, Rb85 Fg=3, Rb85 Fg=2, Rb87 Fg=1
    assert centers[0] < -2.0 and centers[-1] > 3.5


def test_grid_too_coarse_raises():
    with pytest.raises(GridTooCoarseError, match="resolve"):
        sas_spectrum(SasConfig(grid_step=0.01, lamb_dip_width_mhz=20.0))


def test_dip_wider_than_doppler_rejected():
    cfg = SasConfig(lamb_dip_width_mhz=600.0, grid_step=0.002)
    with pytest.raises(ValueError, match="narrow"):
        sas_spectrum(cfg)


def test_config_validation():
    with pytest.raises(ValueError, match="temperature"):
        SasConfig(temperature=-1.0)
    with pytest.raises(ValueError, match="depth"):
        SasConfig(lamb_dip_depth=1.5)
    with pytest.raises(ValueError, match="grid_min"):
        SasConfig(grid_min=2.0, grid_max=-2.0)
    with pytest.raises(ValueError, match="power"):
        SasConfig(incident_power=0.0)


def test_grid_covers_range_inclusively():
    cfg = SasConfig(grid_min=-1.0, grid_max=1.0, grid_step=0.01)
    g = cfg.grid()
    assert g[0] == pytest.approx(-1.0)
    assert g[-1] == pytest.approx(1.0)
    assert np.allclose(np.diff(g), 0.01)
