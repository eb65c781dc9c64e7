"""Trap arrays built from microlens optics, VCSEL sources and dual-beam spacing control."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import constants as csts

from .errors import DomainError
from .optics import (GaussianBeam, MicrolensArray, MAX_PARAXIAL_ANGLE, dual_beam_site_offset,
                     lenslet_power_share, site_waist)
from .species import AtomSpecies, doppler_temperature, k_B, wavelength_from_detuning
from .trapfield import TrapSite, characterize_site

# separations below this many site waists are where neighbouring foci start to interfere
INTERFERENCE_WAISTS = 4.0


class Source(str, Enum):
    SINGLE_BEAM = "single-beam"
    DUAL_BEAM = "dual-beam"
    VCSEL = "vcsel-array"


@dataclass
class TrapArray:
    """Lattice of trap sites; ``sites`` is row-major, second lattice (if any) appended."""

    sites: list[TrapSite]
    pitch: float
    rows: int
    cols: int
    source: Source = Source.SINGLE_BEAM
    offset: float = 0.0
    species: str = ""
    detuning: float = 0.0

    @property
    def geometry(self) -> str:
        return "1D" if min(self.rows, self.cols) == 1 else "2D"

    @property
    def n_trapped(self) -> int:
        return sum(s.trapped for s in self.sites)

    def depths(self) -> np.ndarray:
        return np.array([s.depth for s in self.sites])

    def to_dict(self) -> dict:
        return {
            "species": self.species,
            "pitch_m": self.pitch,
            "rows": self.rows,
            "cols": self.cols,
            "geometry": self.geometry,
            "source": Source(self.source).value,
            "offset_m": self.offset,
            "detuning_rad_s": self.detuning,
            "n_trapped": self.n_trapped,
            "sites": [s.to_dict() for s in self.sites],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrapArray":
        return cls(sites=[TrapSite.from_dict(s) for s in data["sites"]], pitch=data["pitch_m"],
                   rows=data["rows"], cols=data["cols"], source=Source(data["source"]),
                   offset=data["offset_m"], species=data["species"],
                   detuning=data["detuning_rad_s"])

    def csv_rows(self):
        header = ["site", "site_row", "site_col", "lattice", "x_m", "y_m", "z_m", "power_W",
                  "depth_over_kB_mK", "trapped"]
        rows = []
        for i, s in enumerate(self.sites):
            rows.append([i, s.row, s.col, s.lattice, *s.position, s.source_power,
                         s.depth / k_B * 1e3, int(s.trapped)])
        return header, rows


def _default_floor(species):
    return k_B * doppler_temperature(species)


def build_array(array_optics: MicrolensArray, beam: GaussianBeam, species: AtomSpecies,
                detuning: float, *, min_depth: float | None = None,
                second_beam_angle: float | None = None,
                order: tuple[int, int] = (32, 32)) -> TrapArray:
    """One trap per lenslet, fed by the share of ``beam`` that lands on its aperture.

    Sites shallower than ``min_depth`` (default: the Doppler energy k_B T_D)
    are marked untrapped. Passing ``second_beam_angle`` adds an identical
    beam tilted in the x-z plane, producing a second lattice displaced by
    f tan(angle).
    """
    if min_depth is None:
        min_depth = _default_floor(species)
    shares = lenslet_power_share(array_optics, beam, order=order)
    waist = site_waist(array_optics, beam.wavelength)
    foci = array_optics.focal_positions()
    indices = array_optics.site_indices()

    def lattice(shift, label):
        sites = []
        for i, (r, c) in enumerate(indices):
            pos = foci[i] + np.array([shift, 0.0, 0.0])
            site = characterize_site(species, shares[i], waist, detuning, position=pos,
                                     wavelength=beam.wavelength, min_depth=min_depth)
            sites.append(replace(site, row=r, col=c, lattice=label))
        return sites

    sites = lattice(0.0, 0)
    source, offset = Source.SINGLE_BEAM, 0.0
    if second_beam_angle is not None:
        offset = float(dual_beam_site_offset(array_optics, second_beam_angle))
        sites += lattice(offset, 1)
        source = Source.DUAL_BEAM
    return TrapArray(sites=sites, pitch=array_optics.pitch, rows=array_optics.rows,
                     cols=array_optics.cols, source=source, offset=offset,
                     species=species.name, detuning=detuning)


@dataclass
class VcselConfig:
    per_site_power: dict[int, float]
    per_site_enabled: dict[int, bool] = field(default_factory=dict)
    wavelength_offsets: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(p < 0 for p in self.per_site_power.values()):
            raise DomainError("VCSEL powers must be nonnegative")
        if not self.per_site_enabled:
            self.per_site_enabled = {k: True for k in self.per_site_power}
        if not self.wavelength_offsets:
            self.wavelength_offsets = {k: 0.0 for k in self.per_site_power}

    @classmethod
    def uniform(cls, n_sites: int, power: float) -> "VcselConfig":
        return cls({i: power for i in range(n_sites)})

    def with_site(self, index: int, *, power=None, enabled=None) -> "VcselConfig":
        """Copy with one emitter changed."""
        powers, on = dict(self.per_site_power), dict(self.per_site_enabled)
        if power is not None:
            powers[index] = power
        if enabled is not None:
            on[index] = enabled
        return VcselConfig(powers, on, dict(self.wavelength_offsets))


def build_vcsel_array(array_optics: MicrolensArray, config: VcselConfig, species: AtomSpecies,
                      detuning: float, *, min_depth: float | None = None) -> TrapArray:
    """Traps from a VCSEL array imaged one-to-one through the microlenses.

    Each emitter's full power is focused by its lenslet. A per-site
    wavelength offset shifts that site's wavelength (and so its detuning)
    from the nominal trap wavelength.
    """
    expected = set(range(array_optics.size))
    for name, mapping in (("per_site_power", config.per_site_power),
                          ("per_site_enabled", config.per_site_enabled),
                          ("wavelength_offsets", config.wavelength_offsets)):
        if set(mapping) != expected:
            raise DomainError(f"VCSEL {name} covers sites {sorted(mapping)}, "
                              f"lattice has {array_optics.size}")
    if min_depth is None:
        min_depth = _default_floor(species)
    nominal = wavelength_from_detuning(species, detuning)
    foci = array_optics.focal_positions()
    sites = []
    for i, (r, c) in enumerate(array_optics.site_indices()):
        lam = nominal + config.wavelength_offsets[i]
        site_detuning = 2 * np.pi * csts.c / lam - species.transition_frequency
        power = config.per_site_power[i] if config.per_site_enabled[i] else 0.0
        site = characterize_site(species, power, site_waist(array_optics, lam), site_detuning,
                                 position=foci[i], wavelength=lam, min_depth=min_depth)
        sites.append(replace(site, row=r, col=c))
    return TrapArray(sites=sites, pitch=array_optics.pitch, rows=array_optics.rows,
                     cols=array_optics.cols, source=Source.VCSEL, species=species.name,
                     detuning=detuning)


@dataclass
class SpacingSchedule:
    """Beam-angle waypoints, linearly interpolated in time."""

    samples: list[tuple[float, float]]
    hold_separation: float
    hold_duration: float

    def __post_init__(self):
        self.samples = [(float(t), float(a)) for t, a in self.samples]
        if len(self.samples) < 1:
            raise DomainError("spacing schedule needs at least one sample")
        times = np.array([t for t, _ in self.samples])
        if np.any(np.diff(times) <= 0):
            raise DomainError("schedule times must be strictly increasing")
        if any(abs(a) > MAX_PARAXIAL_ANGLE for _, a in self.samples):
            raise DomainError("schedule angles must be paraxial")
        if self.hold_separation < 0 or self.hold_duration < 0:
            raise DomainError("hold separation and duration must be nonnegative")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])

    @property
    def angles(self) -> np.ndarray:
        return np.array([a for _, a in self.samples])

    def angle_at(self, t):
        return np.interp(t, self.times, self.angles)


@dataclass
class ScheduleResult:
    frames: list[tuple[float, TrapArray]]
    windows: list[tuple[float, float]]
    gate_window: tuple[float, float] | None
    success: bool
    min_separation: float
    interference_warning: bool

    @property
    def window_duration(self) -> float:
        if self.gate_window is None:
            return 0.0
        return self.gate_window[1] - self.gate_window[0]

    def offsets(self) -> list[tuple[float, float]]:
        return [(t, arr.offset) for t, arr in self.frames]


def _below_threshold_intervals(times, angles, limit):
    """Exact intervals where |angle(t)| <= limit for piecewise-linear angle(t)."""
    intervals = []
    if len(times) == 1:
        return [(times[0], times[0])] if abs(angles[0]) <= limit else []
    for t0, t1, a0, a1 in zip(times[:-1], times[1:], angles[:-1], angles[1:]):
        if a0 == a1:
            lo, hi = (0.0, 1.0) if abs(a0) <= limit else (1.0, 0.0)
        else:
            # solve -limit <= a0 + (a1 - a0) s <= limit for s in [0, 1]
            s_a = (-limit - a0) / (a1 - a0)
            s_b = (limit - a0) / (a1 - a0)
            lo, hi = max(0.0, min(s_a, s_b)), min(1.0, max(s_a, s_b))
        if lo <= hi:
            start, end = t0 + lo * (t1 - t0), t0 + hi * (t1 - t0)
            if intervals and np.isclose(intervals[-1][1], start, rtol=0, atol=1e-15):
                intervals[-1] = (intervals[-1][0], end)
            else:
                intervals.append((start, end))
    return intervals


def apply_spacing_schedule(base: TrapArray, schedule: SpacingSchedule,
                           array_optics: MicrolensArray) -> ScheduleResult:
    """Move the second lattice of a dual-beam array along the schedule.

    The gate window is the longest contiguous interval with lattice
    separation at or below ``hold_separation``; the gate succeeds if it lasts
    at least ``hold_duration``.
    """
    if Source(base.source) is not Source.DUAL_BEAM:
        raise DomainError("spacing schedules need an array built in dual-beam mode")
    frames = []
    for t, angle in schedule.samples:
        offset = float(dual_beam_site_offset(array_optics, angle))
        sites = [s if s.lattice == 0 else
                 replace(s, position=(s.position[0] - base.offset + offset, *s.position[1:]))
                 for s in base.sites]
        frames.append((t, replace(base, sites=sites, offset=offset)))

    limit = float(np.arctan(schedule.hold_separation / array_optics.focal_length))
    windows = _below_threshold_intervals(schedule.times, schedule.angles, limit)
    gate_window = max(windows, key=lambda w: w[1] - w[0]) if windows else None
    success = gate_window is not None and \
        bool(gate_window[1] - gate_window[0] >= schedule.hold_duration * (1 - 1e-9))

    # piecewise-linear |angle| attains its minimum at a sample or a zero crossing
    angles = schedule.angles
    crosses = np.any(np.sign(angles[:-1]) * np.sign(angles[1:]) < 0) if len(angles) > 1 else False
    min_sep = 0.0 if crosses else float(array_optics.focal_length * np.tan(np.min(np.abs(angles))))
    waist = max(s.waist for s in base.sites)
    interfering = bool(min_sep < INTERFERENCE_WAISTS * waist)
    if interfering:
        warnings.warn(f"lattice separation reaches {min_sep:.3e} m, comparable to the spot size; "
                      "interference between foci is not modelled", RuntimeWarning, stacklevel=2)
    return ScheduleResult(frames=frames, windows=windows, gate_window=gate_window,
                          success=success, min_separation=min_sep,
                          interference_warning=interfering)
