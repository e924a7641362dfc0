"""Rubidium D1 constants: isotope registry, line strengths, buffer-gas data.

Frequency offsets are always relative to the D1 line centroid with both
hyperfine interactions switched off, in GHz.  Relative line strengths
are degeneracy-weighted absorption fractions that sum to one per
isotope, so a density-weighted sum over isotopes keeps a total of one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from scipy import constants as _const

from .errors import UnknownIsotopeError

# Shared physical constants (SI).
SPEED_OF_LIGHT = _const.c
CLASSICAL_ELECTRON_RADIUS = _const.value("classical electron radius")
BOLTZMANN = _const.k
ATOMIC_MASS_KG = _const.m_u

# D1 line centroid, THz (only used where an absolute optical frequency
# is needed, e.g. Doppler widths).
D1_CENTROID_THZ = 377.107

# Oscillator strength of the D1 transition.
D1_OSCILLATOR_STRENGTH = 0.342


@dataclass(frozen=True)
class IsotopeSpec:
    """Static data for one alkali isotope."""

    name: str
    abundance: float                    # natural fraction of atoms
    gyromagnetic_ratio: float           # ground-state, kHz per uT
    ground_splitting: float             # ground hyperfine splitting, GHz
    excited_splitting: float            # D1 excited hyperfine splitting, GHz
    ground_f: tuple[int, int]           # (lower F, upper F)
    excited_f: tuple[int, int]
    mass_amu: float

    def __post_init__(self):
        assert 0.0 <= self.abundance <= 1.0, self.abundance
        assert self.gyromagnetic_ratio > 0
        assert self.ground_splitting > 0 and self.excited_splitting > 0
        assert self.ground_f[0] < self.ground_f[1]
        assert self.excited_f[0] < self.excited_f[1]
        assert self.mass_amu > 0

    @property
    def mass_kg(self) -> float:
        return self.mass_amu * ATOMIC_MASS_KG


@dataclass(frozen=True)
class BufferGasCoefficients:
    """Pressure broadening/shift of the optical line, per amagat."""

    gas: str
    broadening_coefficient: float       # GHz (FWHM) per amagat, > 0
    shift_coefficient: float            # GHz per amagat, signed

    def __post_init__(self):
        assert self.broadening_coefficient > 0


@dataclass(frozen=True)
class TransitionLine:
    """One resolved hyperfine component of the D1 transition."""

    isotope: str
    ground_f: int
    excited_f: int
    offset: float                       # GHz relative to the D1 centroid
    strength: float                     # absorption fraction, 0..1

    def __post_init__(self):
        assert 0.0 < self.strength <= 1.0
        assert abs(self.excited_f - self.ground_f) <= 1


RB85 = IsotopeSpec(
    name="Rb85",
    abundance=0.7215,
    gyromagnetic_ratio=4.66743,
    ground_splitting=3.035732439,
    excited_splitting=0.36158,
    ground_f=(2, 3),
    excited_f=(2, 3),
    mass_amu=84.911789738,
)

RB87 = IsotopeSpec(
    name="Rb87",
    abundance=0.2785,
    gyromagnetic_ratio=6.99583,
    ground_splitting=6.834682611,
    excited_splitting=0.8145,
    ground_f=(1, 2),
    excited_f=(1, 2),
    mass_amu=86.909180532,
)

NATURAL_RB = {"Rb85": RB85, "Rb87": RB87}

# N2 collisional broadening/shift of the Rb D1 line.
N2_BUFFER = BufferGasCoefficients(
    gas="N2",
    broadening_coefficient=17.804347826086957,
    shift_coefficient=-8.25,
)

# Degeneracy-weighted absorption fractions A(Fg, Fe), exact rationals.
# Each isotope's four allowed D1 components sum to exactly one.
_D1_STRENGTHS = {
    "Rb85": {
        (2, 2): Fraction(5, 54),
        (2, 3): Fraction(35, 108),
        (3, 2): Fraction(35, 108),
        (3, 3): Fraction(7, 27),
    },
    "Rb87": {
        (1, 1): Fraction(1, 16),
        (1, 2): Fraction(5, 16),
        (2, 1): Fraction(5, 16),
        (2, 2): Fraction(5, 16),
    },
}

for _table in _D1_STRENGTHS.values():
    assert sum(_table.values()) == 1


def get_isotope(name: str, registry: dict | None = None) -> IsotopeSpec:
    """Look up one isotope by name ('Rb85' or 'Rb87')."""
    reg = NATURAL_RB if registry is None else registry
    for key, spec in reg.items():
        if key.lower() == name.lower():
            return spec
    raise UnknownIsotopeError(
        f"unknown isotope {name!r}; known: {', '.join(sorted(reg))}"
    )


def hyperfine_level_offsets(f_levels: tuple[int, int], splitting: float) -> dict:
    """Energy offsets of two hyperfine levels about their centroid, GHz.

    Degeneracy-weighted offsets sum to zero, so the pair straddles the
    centroid with the upper level shifted by g_lo/(g_lo+g_hi) of the
    splitting and the lower level by -g_hi/(g_lo+g_hi).
    """
    f_lo, f_hi = f_levels
    g_lo = 2 * f_lo + 1
    g_hi = 2 * f_hi + 1
    total = g_lo + g_hi
    return {
        f_lo: -splitting * g_hi / total,
        f_hi: +splitting * g_lo / total,
    }


def d1_transition_lines(isotope: IsotopeSpec) -> tuple[TransitionLine, ...]:
    """All allowed ground->excited D1 components of one isotope.

    Offsets combine the ground and excited hyperfine level positions; the
    strength table is keyed by isotope name, so renaming an isotope in a
    config override keeps its own line structure.
    """
    try:
        strengths = _D1_STRENGTHS[isotope.name]
    except KeyError:
        raise UnknownIsotopeError(
            f"no D1 strength table for isotope {isotope.name!r}"
        ) from None
    ground = hyperfine_level_offsets(isotope.ground_f, isotope.ground_splitting)
    excited = hyperfine_level_offsets(isotope.excited_f, isotope.excited_splitting)
    lines = []
    for (fg, fe), strength in sorted(strengths.items()):
        lines.append(
            TransitionLine(
                isotope=isotope.name,
                ground_f=fg,
                excited_f=fe,
                offset=excited[fe] - ground[fg],
                strength=float(strength),
            )
        )
    return tuple(lines)


def natural_weights(registry: dict | None = None) -> dict:
    """Isotope name -> natural abundance, for the default registry."""
    reg = NATURAL_RB if registry is None else registry
    return {name: spec.abundance for name, spec in reg.items()}


def registry_from_config(cfg: dict) -> dict:
    """Rebuild the isotope registry with config-file overrides applied.

    Keys follow the packaged defaults file: ``rb85.abundance``,
    ``rb87.gyromagnetic_khz_per_ut`` and so on.
    """
    def f(key):
        return float(cfg[key])

    reg = {}
    for name, base in NATURAL_RB.items():
        prefix = name.lower()
        reg[name] = IsotopeSpec(
            name=name,
            abundance=f(f"{prefix}.abundance"),
            gyromagnetic_ratio=f(f"{prefix}.gyromagnetic_khz_per_ut"),
            ground_splitting=f(f"{prefix}.ground_splitting_ghz"),
            excited_splitting=f(f"{prefix}.excited_splitting_ghz"),
            ground_f=base.ground_f,
            excited_f=base.excited_f,
            mass_amu=f(f"{prefix}.mass_amu"),
        )
    return reg


def buffer_gas_from_config(cfg: dict) -> BufferGasCoefficients:
    return BufferGasCoefficients(
        gas="N2",
        broadening_coefficient=float(cfg["n2.broadening_ghz_per_amagat"]),
        shift_coefficient=float(cfg["n2.shift_ghz_per_amagat"]),
    )
