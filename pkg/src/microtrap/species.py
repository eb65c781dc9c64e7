"""Atomic species records and single-atom energy scales."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants as csts

from .errors import DomainError

hbar = csts.hbar
k_B = csts.k
c = csts.c


@dataclass(frozen=True)
class AtomSpecies:
    """Two-level description of an alkali atom.

    ``natural_linewidth`` is an angular frequency (rad/s), all other fields SI.
    """

    name: str
    mass: float
    transition_wavelength: float
    natural_linewidth: float
    saturation_intensity: float

    def __post_init__(self):
        for field in ("mass", "transition_wavelength", "natural_linewidth",
                      "saturation_intensity"):
            value = getattr(self, field)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"{field} must be positive, got {value!r}")

    @property
    def transition_frequency(self) -> float:
        """Angular frequency of the transition."""
        return 2 * np.pi * c / self.transition_wavelength

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.transition_wavelength


def two_level_saturation_intensity(wavelength: float, linewidth: float) -> float:
    """I_sat = pi h c Gamma / (3 lambda^3) for a closed two-level transition."""
    return np.pi * csts.h * c * linewidth / (3 * wavelength**3)


_RB85_WAVELENGTH = 780.241e-9
# 27 ns lifetime; reproduces 0.141 mK for the Doppler limit
_RB85_LINEWIDTH = 2 * np.pi * 5.89e6

RB85 = AtomSpecies(
    name="Rb85",
    mass=84.911789738 * csts.atomic_mass,
    transition_wavelength=_RB85_WAVELENGTH,
    natural_linewidth=_RB85_LINEWIDTH,
    saturation_intensity=two_level_saturation_intensity(_RB85_WAVELENGTH, _RB85_LINEWIDTH),
)

BUILTIN_SPECIES = {"Rb85": RB85}


def get_species(name: str) -> AtomSpecies:
    try:
        return BUILTIN_SPECIES[name]
    except KeyError:
        raise KeyError(f"unknown species {name!r}; built-in: {sorted(BUILTIN_SPECIES)}") from None


def doppler_temperature(species: AtomSpecies) -> float:
    """Doppler cooling limit hbar*Gamma/(2 k_B) in kelvin."""
    return hbar * species.natural_linewidth / (2 * k_B)


def recoil_energy(species: AtomSpecies) -> float:
    """Single-photon recoil energy hbar^2 k^2 / 2m in joules."""
    return (hbar * species.wavenumber) ** 2 / (2 * species.mass)


def detuning_from_wavelength_offset(species: AtomSpecies, delta_lambda: float) -> float:
    """Convert a laser wavelength offset from the transition into an angular detuning.

    Positive ``delta_lambda`` (longer wavelength) is red, giving a negative detuning.
    """
    lam0 = species.transition_wavelength
    if abs(delta_lambda) >= lam0 / 10:
        raise DomainError(
            f"wavelength offset {delta_lambda!r} m too large for the linearised conversion")
    return -2 * np.pi * c * delta_lambda / lam0**2


def wavelength_from_detuning(species: AtomSpecies, detuning: float) -> float:
    """Exact laser wavelength for an angular detuning from the transition."""
    omega = species.transition_frequency + detuning
    if omega <= 0:
        raise DomainError(f"detuning {detuning!r} rad/s gives a nonpositive laser frequency")
    return 2 * np.pi * c / omega
