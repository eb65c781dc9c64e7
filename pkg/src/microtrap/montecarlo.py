"""Monte Carlo loading of a thermal cloud into a trap site and lifetime analysis.

Atoms are reduced to their total energy. Each atom owns a random stream
derived from (seed, stage, atom index), so results do not depend on how the
atoms are partitioned across workers.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .species import AtomSpecies, k_B, recoil_energy
from .trapfield import TrapSite

PRNG_NAME = "numpy PCG64, per-atom SeedSequence(seed, spawn_key=(stage, atom))"
_LOAD_STAGE = 0
_EVOLVE_STAGE = 1


@dataclass(frozen=True)
class McScenario:
    seed: int
    atom_count: int
    cloud_temperature: float
    cloud_radius: float
    background_loss_rate: float
    include_recoil_heating: bool
    duration: float
    sample_times: tuple
    time_step: float = 1e-3
    cloud_offset: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "sample_times", tuple(float(t) for t in self.sample_times))
        object.__setattr__(self, "cloud_offset", tuple(float(v) for v in self.cloud_offset))
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.atom_count < 1:
            raise DomainError("atom_count must be >= 1")
        if self.cloud_temperature <= 0:
            raise DomainError("cloud temperature must be positive")
        if self.cloud_radius < 0:
            raise DomainError("cloud radius must be nonnegative")
        if self.background_loss_rate < 0:
            raise DomainError("background loss rate must be nonnegative")
        if self.duration < 0 or self.time_step <= 0:
            raise DomainError("duration must be >= 0 and time_step > 0")
        t = np.asarray(self.sample_times)
        if len(t) and (np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > self.duration):
            raise DomainError("sample times must increase strictly within [0, duration]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sample_times"] = list(self.sample_times)
        d["cloud_offset"] = list(self.cloud_offset)
        return d


@dataclass
class LoadResult:
    positions: np.ndarray
    velocities: np.ndarray
    energies: np.ndarray
    loaded: np.ndarray

    @property
    def loaded_fraction(self) -> float:
        return float(np.mean(self.loaded))

    @property
    def loaded_energies(self) -> np.ndarray:
        return self.energies[self.loaded]


@dataclass
class FitResult:
    lifetime: float
    stderr: float
    amplitude: float


@dataclass
class McResult:
    loaded_fraction: float
    survival_counts: list[tuple[float, int]]
    mean_energy: list[tuple[float, float]]
    fitted_lifetime: float | None
    fitted_lifetime_stderr: float | None
    metadata: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "loaded_fraction": self.loaded_fraction,
            "loaded_atoms": self.survival_counts[0][1] if self.survival_counts else None,
            "fitted_lifetime_s": self.fitted_lifetime,
            "fitted_lifetime_stderr_s": self.fitted_lifetime_stderr,
            "metadata": self.metadata,
        }


def _atom_rng(seed: int, stage: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stage, index))))


def load(scenario: McScenario, site: TrapSite, species: AtomSpecies) -> LoadResult:
    """Sample a Gaussian thermal cloud and keep atoms with negative total energy."""
    if not site.trapped:
        raise DomainError("cannot load atoms into an untrapped site")
    n = scenario.atom_count
    draws = np.empty((n, 6))
    for i in range(n):
        draws[i] = _atom_rng(scenario.seed, _LOAD_STAGE, i).standard_normal(6)
    centre = np.asarray(site.position) + np.asarray(scenario.cloud_offset)
    positions = centre + scenario.cloud_radius * draws[:, :3]
    sigma_v = np.sqrt(k_B * scenario.cloud_temperature / species.mass)
    velocities = sigma_v * draws[:, 3:]
    kinetic = 0.5 * species.mass * np.sum(velocities**2, axis=1)
    energies = kinetic + site.potential(positions)
    return LoadResult(positions, velocities, energies, energies < 0)


def evolve(loaded: LoadResult, site: TrapSite, species: AtomSpecies,
           scenario: McScenario) -> McResult:
    """Propagate loaded atoms under background loss and optional recoil heating.

    Background collisions remove an atom at an exponentially distributed
    time. With heating on, each time step draws a Poisson number of
    scattering events, each adding twice the recoil energy; an atom is lost
    once its energy exceeds zero.
    """
    idx = np.flatnonzero(loaded.loaded)
    e0 = loaded.energies[idx]
    times = np.asarray(scenario.sample_times)
    dt = scenario.time_step
    n_steps = int(np.ceil(scenario.duration / dt - 1e-9))
    # heating steps completed by each sample time
    sample_steps = np.minimum(np.floor(times / dt + 1e-9).astype(int), n_steps)
    kick = 2 * recoil_energy(species)
    mean_events = site.scattering_rate * dt
    heat = scenario.include_recoil_heating and mean_events > 0

    loss_time = np.full(len(idx), np.inf)
    energy_at = np.repeat(e0[:, None], len(times), axis=1)
    for j, atom in enumerate(idx):
        rng = _atom_rng(scenario.seed, _EVOLVE_STAGE, int(atom))
        if scenario.background_loss_rate > 0:
            loss_time[j] = rng.exponential(1.0 / scenario.background_loss_rate)
        if heat and n_steps > 0:
            cum = np.concatenate([[0], np.cumsum(rng.poisson(mean_events, n_steps))])
            energy = e0[j] + kick * cum
            escaped = np.flatnonzero(energy[1:] > 0)
            if escaped.size:
                loss_time[j] = min(loss_time[j], (escaped[0] + 1) * dt)
            energy_at[j] = energy[sample_steps]

    alive = loss_time[:, None] > times[None, :]
    counts = alive.sum(axis=0)
    with np.errstate(invalid="ignore"):
        mean_e = np.where(counts > 0, (energy_at * alive).sum(axis=0) / np.maximum(counts, 1),
                          np.nan)

    lifetime = stderr = None
    try:
        fit = fit_exponential(list(zip(times, counts)))
        lifetime, stderr = fit.lifetime, fit.stderr
    except DomainError:
        pass
    return McResult(
        loaded_fraction=loaded.loaded_fraction,
        survival_counts=[(float(t), int(c)) for t, c in zip(times, counts)],
        mean_energy=[(float(t), float(e)) for t, e in zip(times, mean_e)],
        fitted_lifetime=lifetime,
        fitted_lifetime_stderr=stderr,
        metadata={"prng": PRNG_NAME, "scenario": scenario.to_dict(),
                  "site_depth_J": site.depth, "site_scattering_rate_per_s": site.scattering_rate},
    )


def simulate(scenario: McScenario, site: TrapSite, species: AtomSpecies) -> McResult:
    return evolve(load(scenario, site, species), site, species, scenario)


def fit_exponential(survival_counts) -> FitResult:
    """Fit N(t) = A exp(-t / tau) by weighted least squares on log counts.

    Weights are the counts themselves (inverse Poisson variance of log N),
    so the returned standard error assumes Poisson-distributed counts.
    """
    data = np.asarray(survival_counts, dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise DomainError("degenerate fit: need at least 3 (time, count) points")
    t, n = data[:, 0], data[:, 1]
    if np.any(n <= 0):
        raise DomainError("degenerate fit: counts must be strictly positive")
    if np.all(n == n[0]):
        raise DomainError("degenerate fit: all counts are equal")
    X = np.column_stack([np.ones_like(t), t])
    y = np.log(n)
    XtW = X.T * n
    cov = np.linalg.inv(XtW @ X)
    intercept, slope = cov @ (XtW @ y)
    if slope >= 0:
        raise DomainError("counts do not decay; no lifetime can be fitted")
    tau = -1.0 / slope
    return FitResult(lifetime=float(tau), stderr=float(np.sqrt(cov[1, 1]) / slope**2),
                     amplitude=float(np.exp(intercept)))
