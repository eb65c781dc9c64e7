"""Design and simulation of microlens-array optical dipole trap registers."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError
from .species import (AtomSpecies, RB85, detuning_from_wavelength_offset, doppler_temperature,
                      get_species, recoil_energy)
from .optics import (GaussianBeam, MicrolensArray, RelayTelescope, beam_intensity,
                     dual_beam_site_offset, focal_spot_radius, lenslet_power_share,
                     numerical_aperture, relay_image)
from .trapfield import (TrapSite, characterize_site, dipole_depth, ground_state_extent,
                        scattering_rate, trap_frequencies)
from .array import (SpacingSchedule, TrapArray, VcselConfig, apply_spacing_schedule,
                    build_array, build_vcsel_array)
from .register import (QubitRegister, QubitState, RamanPulse, coherence_time_estimate,
                       collection_efficiency, crosstalk_map, effective_rabi, readout, rotate)
from .montecarlo import McResult, McScenario, evolve, fit_exponential, load, simulate
