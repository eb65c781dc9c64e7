"""Qubit register on a trap array: Raman addressing, rotations, coherence and readout."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array import TrapArray
from .errors import DomainError
from .trapfield import TrapSite

# Raman adiabatic elimination requires the single-photon detuning to dominate
MIN_RAMAN_DETUNING_RATIO = 10.0
NORM_TOL = 1e-9


@dataclass(frozen=True)
class QubitState:
    """Bloch vector (u, v, w); w = -1 is |0>, w = +1 is |1>."""

    bloch: tuple = (0.0, 0.0, -1.0)

    def __post_init__(self):
        b = np.asarray(self.bloch, dtype=float)
        if b.shape != (3,):
            raise DomainError("Bloch vector must have three components")
        if np.linalg.norm(b) > 1 + NORM_TOL:
            raise DomainError(f"Bloch vector {tuple(b)} has norm > 1")
        object.__setattr__(self, "bloch", tuple(float(x) for x in b))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.bloch)

    @property
    def p_bright(self) -> float:
        return (1 + self.bloch[2]) / 2

    @classmethod
    def ground(cls) -> "QubitState":
        return cls((0.0, 0.0, -1.0))


@dataclass(frozen=True)
class RamanPulse:
    target_site: int
    beam_waist_at_plane: float
    rabi_1: float
    rabi_2: float
    single_photon_detuning: float
    duration: float
    phase: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise DomainError("pulse duration must be nonnegative")
        if self.beam_waist_at_plane <= 0:
            raise DomainError("addressing waist must be positive")
        if self.rabi_1 < 0 or self.rabi_2 < 0:
            raise DomainError("single-photon Rabi frequencies must be nonnegative")


def effective_rabi(pulse: RamanPulse) -> float:
    """Two-photon Rabi frequency Omega_1 Omega_2 / (2 |Delta|)."""
    delta = abs(pulse.single_photon_detuning)
    if delta < MIN_RAMAN_DETUNING_RATIO * max(pulse.rabi_1, pulse.rabi_2) or delta == 0:
        raise DomainError("single-photon detuning too small for a two-photon Raman transition")
    return pulse.rabi_1 * pulse.rabi_2 / (2 * delta)


def rotation_matrix(angle: float, phase: float) -> np.ndarray:
    """Bloch-vector rotation driven about the equatorial axis (cos phase, sin phase, 0).

    Sense follows the optical Bloch equations dv/dt = Omega w, dw/dt = -Omega v:
    a pi/2 pulse at phase 0 takes (0, 0, -1) to (0, -1, 0).
    """
    n = np.array([np.cos(phase), np.sin(phase), 0.0])
    K = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    a = -angle
    return np.eye(3) + np.sin(a) * K + (1 - np.cos(a)) * (K @ K)


def rotate(state: QubitState, pulse: RamanPulse, scale: float = 1.0) -> QubitState:
    """Apply ``pulse`` (area scaled by ``scale``) to a single qubit."""
    theta = scale * effective_rabi(pulse) * pulse.duration
    out = rotation_matrix(theta, pulse.phase) @ state.vector
    return QubitState(tuple(out))


def _transverse_distances(array: TrapArray, target: int) -> np.ndarray:
    pos = np.array([s.position for s in array.sites])
    d = pos[:, :2] - pos[target, :2]
    return np.hypot(d[:, 0], d[:, 1])


def crosstalk_map(array: TrapArray, pulse: RamanPulse) -> dict[int, float]:
    """Ratio of the local two-photon coupling to that at the target site.

    Both Raman beams are Gaussian spots centred on the target; the coupling
    scales with the product of their field envelopes, exp(-2 d^2 / w^2).
    """
    if not 0 <= pulse.target_site < len(array.sites):
        raise DomainError(f"target site {pulse.target_site} not in array")
    d = _transverse_distances(array, pulse.target_site)
    ratio = np.exp(-2 * d**2 / pulse.beam_waist_at_plane**2)
    return {i: float(r) for i, r in enumerate(ratio)}


def stark_leakage(array: TrapArray, pulse: RamanPulse) -> float:
    """Largest single-beam intensity at a non-target site, relative to the target.

    Diagnostic for differential light shifts on neighbours; not applied to states.
    """
    d = _transverse_distances(array, pulse.target_site)
    ratio = np.exp(-2 * d**2 / pulse.beam_waist_at_plane**2)
    ratio[pulse.target_site] = 0.0
    return float(ratio.max()) if len(ratio) > 1 else 0.0


def coherence_time_estimate(site: TrapSite) -> float:
    """Scattering-limited upper bound 1 / Gamma_sc on the coherence time."""
    if not site.trapped:
        raise DomainError("coherence time is undefined for an untrapped site")
    if site.scattering_rate == 0:
        return float("inf")
    return 1.0 / site.scattering_rate


def collection_efficiency(na: float) -> float:
    """Fraction of isotropic fluorescence inside the collection cone of half-angle asin(na)."""
    if not 0 < na < 1:
        raise DomainError(f"numerical aperture must lie in (0, 1), got {na!r}")
    return (1 - np.sqrt(1 - na**2)) / 2


@dataclass
class QubitRegister:
    """Mutable per-site qubit states. Single writer; copy before sharing."""

    states: dict[int, QubitState]
    coherence_time: dict[int, float | None] = field(default_factory=dict)

    @classmethod
    def from_array(cls, array: TrapArray) -> "QubitRegister":
        states = {i: QubitState.ground() for i in range(len(array.sites))}
        times = {i: coherence_time_estimate(s) if s.trapped else None
                 for i, s in enumerate(array.sites)}
        return cls(states, times)

    def _check(self, site):
        if site not in self.states:
            raise DomainError(f"site {site!r} not in register")

    def apply_pulse(self, array: TrapArray, pulse: RamanPulse) -> dict[int, float]:
        """Rotate every site by the pulse area scaled by its crosstalk ratio."""
        self._check(pulse.target_site)
        ratios = crosstalk_map(array, pulse)
        for i, r in ratios.items():
            if r > 0 and i in self.states:
                self.states[i] = rotate(self.states[i], pulse, scale=r)
        return ratios

    def store(self, duration: float):
        """Idle for ``duration``: transverse components decay with each site's coherence time."""
        if duration < 0:
            raise DomainError("storage duration must be nonnegative")
        for i, state in self.states.items():
            t2 = self.coherence_time.get(i)
            if t2 is None or np.isinf(t2):
                continue
            u, v, w = state.bloch
            k = np.exp(-duration / t2)
            self.states[i] = QubitState((u * k, v * k, w))

    def to_records(self) -> list[dict]:
        return [{"site": i, "u": s.bloch[0], "v": s.bloch[1], "w": s.bloch[2],
                 "coherence_time_s": self.coherence_time.get(i)}
                for i, s in sorted(self.states.items())]


def readout(register: QubitRegister, site: int, na: float, scatter_count: float) -> float:
    """Expected detected photons from state-selective fluorescence of one site."""
    register._check(site)
    if scatter_count < 0:
        raise DomainError("scatter count must be nonnegative")
    return scatter_count * collection_efficiency(na) * register.states[site].p_bright
