"""Far-detuned dipole-trap physics for a single focused Gaussian site."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .species import AtomSpecies, hbar, k_B, wavelength_from_detuning

# far-detuned two-level formulas are only trusted beyond this many linewidths
MIN_DETUNING_LINEWIDTHS = 100


@dataclass(frozen=True)
class TrapSite:
    """A characterized dipole trap at one focus.

    ``depth`` is signed (negative traps for red detuning). Fields derived from
    the harmonic expansion are ``None`` when the site does not trap.
    ``ground_state_extent`` is the rms radius sqrt(hbar / 2 m omega_r).
    """

    position: tuple
    depth: float
    waist: float
    wavelength: float
    detuning: float
    source_power: float
    scattering_rate: float
    radial_frequency: float | None = None
    axial_frequency: float | None = None
    ground_state_extent: float | None = None
    lamb_dicke: float | None = None
    trapped: bool = False
    sideband_coolable: bool = False
    row: int = 0
    col: int = 0
    lattice: int = 0

    @property
    def rayleigh_range(self) -> float:
        return np.pi * self.waist**2 / self.wavelength

    @property
    def depth_over_kB(self) -> float:
        return self.depth / k_B

    def potential(self, points) -> np.ndarray:
        """Dipole potential (J) at absolute positions, shape (..., 3)."""
        d = np.asarray(points, dtype=float) - np.asarray(self.position)
        r2 = d[..., 0] ** 2 + d[..., 1] ** 2
        s = 1 + (d[..., 2] / self.rayleigh_range) ** 2
        return self.depth / s * np.exp(-2 * r2 / (self.waist**2 * s))

    def to_dict(self) -> dict:
        return {
            "row": self.row,
            "col": self.col,
            "lattice": self.lattice,
            "position_m": list(self.position),
            "depth_J": self.depth,
            "depth_over_kB_mK": self.depth / k_B * 1e3,
            "waist_m": self.waist,
            "wavelength_m": self.wavelength,
            "detuning_rad_s": self.detuning,
            "source_power_W": self.source_power,
            "scattering_rate_per_s": self.scattering_rate,
            "radial_frequency_rad_s": self.radial_frequency,
            "axial_frequency_rad_s": self.axial_frequency,
            "ground_state_extent_m": self.ground_state_extent,
            "lamb_dicke": self.lamb_dicke,
            "trapped": self.trapped,
            "sideband_coolable": self.sideband_coolable,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrapSite":
        return cls(
            position=tuple(data["position_m"]),
            depth=data["depth_J"],
            waist=data["waist_m"],
            wavelength=data["wavelength_m"],
            detuning=data["detuning_rad_s"],
            source_power=data["source_power_W"],
            scattering_rate=data["scattering_rate_per_s"],
            radial_frequency=data["radial_frequency_rad_s"],
            axial_frequency=data["axial_frequency_rad_s"],
            ground_state_extent=data["ground_state_extent_m"],
            lamb_dicke=data["lamb_dicke"],
            trapped=data["trapped"],
            sideband_coolable=data["sideband_coolable"],
            row=data.get("row", 0),
            col=data.get("col", 0),
            lattice=data.get("lattice", 0),
        )


def _check_detuning(species: AtomSpecies, detuning: float):
    if abs(detuning) < MIN_DETUNING_LINEWIDTHS * species.natural_linewidth:
        raise DomainError(
            f"|detuning| = {abs(detuning):.3e} rad/s is below {MIN_DETUNING_LINEWIDTHS} "
            "linewidths; far-detuned approximation invalid")


def _check_intensity(intensity):
    if np.any(np.asarray(intensity) < 0):
        raise DomainError("intensity must be nonnegative")


def dipole_depth(species: AtomSpecies, peak_intensity, detuning):
    """U0 = hbar Gamma^2 I / (8 delta I_sat); negative for red detuning."""
    _check_detuning(species, detuning)
    _check_intensity(peak_intensity)
    gamma = species.natural_linewidth
    return hbar * gamma**2 * peak_intensity / (8 * detuning * species.saturation_intensity)


def scattering_rate(species: AtomSpecies, peak_intensity, detuning):
    """Photon scattering rate Gamma^3 I / (8 delta^2 I_sat) in 1/s."""
    _check_detuning(species, detuning)
    _check_intensity(peak_intensity)
    gamma = species.natural_linewidth
    return gamma**3 * peak_intensity / (8 * detuning**2 * species.saturation_intensity)


def trap_frequencies(species: AtomSpecies, depth: float, waist: float, wavelength: float):
    """Harmonic (radial, axial) angular frequencies at the bottom of a Gaussian focus."""
    if not depth < 0:
        raise DomainError(f"depth {depth!r} J does not trap (must be negative)")
    if waist <= 0 or wavelength <= 0:
        raise DomainError("waist and wavelength must be positive")
    z_r = np.pi * waist**2 / wavelength
    radial = np.sqrt(4 * abs(depth) / (species.mass * waist**2))
    axial = np.sqrt(2 * abs(depth) / (species.mass * z_r**2))
    return float(radial), float(axial)


def ground_state_extent(species: AtomSpecies, trap_frequency: float) -> float:
    """rms width sqrt(hbar / 2 m omega) of the harmonic-oscillator ground state."""
    if trap_frequency <= 0:
        raise DomainError("trap frequency must be positive")
    return float(np.sqrt(hbar / (2 * species.mass * trap_frequency)))


def characterize_site(species: AtomSpecies, site_power: float, site_waist: float,
                      detuning: float, position=(0.0, 0.0, 0.0),
                      wavelength: float | None = None, min_depth: float = 0.0) -> TrapSite:
    """Fill every TrapSite field for a Gaussian focus of given power and waist.

    Sites with ``|depth| <= min_depth`` or non-negative depth are returned
    with ``trapped=False`` and no harmonic quantities.
    """
    if site_power < 0:
        raise DomainError("site power must be nonnegative")
    if site_waist <= 0:
        raise DomainError("site waist must be positive")
    if wavelength is None:
        wavelength = wavelength_from_detuning(species, detuning)
    intensity = 2 * site_power / (np.pi * site_waist**2)
    depth = float(dipole_depth(species, intensity, detuning))
    gamma_sc = float(scattering_rate(species, intensity, detuning))
    common = dict(position=tuple(float(v) for v in position), depth=depth, waist=site_waist,
                  wavelength=wavelength, detuning=detuning, source_power=site_power,
                  scattering_rate=gamma_sc)
    if not (depth < 0 and abs(depth) > min_depth):
        return TrapSite(**common)

    radial, axial = trap_frequencies(species, depth, site_waist, wavelength)
    extent = ground_state_extent(species, radial)
    eta = 2 * np.pi / wavelength * extent
    coolable = bool(eta < 1 and gamma_sc < axial / (2 * np.pi))
    return TrapSite(**common, radial_frequency=radial, axial_frequency=axial,
                    ground_state_extent=extent, lamb_dicke=eta, trapped=True,
                    sideband_coolable=coolable)
