"""Gaussian beams, microlens arrays and the relay imaging geometry."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError

AIRY_FACTOR = 0.61
# 1/e^2 radius of the Gaussian fitted to the Airy disk, in units of the first-zero radius
AIRY_TO_GAUSSIAN = 0.8
MAX_PARAXIAL_ANGLE = 0.2


class LensKind(str, Enum):
    REFRACTIVE = "refractive"
    DIFFRACTIVE = "diffractive"


@dataclass(frozen=True)
class GaussianBeam:
    power: float
    waist: float
    wavelength: float
    focus_position: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.power < 0:
            raise DomainError(f"beam power must be >= 0, got {self.power!r}")
        if self.waist <= 0 or self.wavelength <= 0:
            raise DomainError("beam waist and wavelength must be positive")
        axis = np.asarray(self.axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise DomainError("beam axis must be nonzero")
        object.__setattr__(self, "axis", tuple(axis / norm))
        object.__setattr__(self, "focus_position",
                           tuple(float(v) for v in self.focus_position))

    @property
    def rayleigh_range(self) -> float:
        return np.pi * self.waist**2 / self.wavelength

    @property
    def peak_intensity(self) -> float:
        return 2 * self.power / (np.pi * self.waist**2)

    def radius(self, z):
        """1/e^2 intensity radius at axial distance ``z`` from the focus."""
        return self.waist * np.sqrt(1 + (np.asarray(z) / self.rayleigh_range) ** 2)


@dataclass(frozen=True)
class MicrolensArray:
    pitch: float
    lens_diameter: float
    focal_length: float
    rows: int = 1
    cols: int = 1
    kind: LensKind = LensKind.REFRACTIVE

    def __post_init__(self):
        if self.pitch <= 0 or self.lens_diameter <= 0 or self.focal_length <= 0:
            raise DomainError("pitch, lens_diameter and focal_length must be positive")
        # single lenslets may exceed the nominal pitch
        if self.lens_diameter > self.pitch and self.rows * self.cols > 1:
            raise DomainError("lens_diameter must not exceed pitch")
        if self.rows < 1 or self.cols < 1:
            raise DomainError("rows and cols must be >= 1")
        object.__setattr__(self, "kind", LensKind(self.kind))

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def site_indices(self):
        """(row, col) for each lenslet in row-major order."""
        return [(r, c) for r in range(self.rows) for c in range(self.cols)]

    def lenslet_centers(self) -> np.ndarray:
        """Lenslet centres in the array plane, shape (rows*cols, 2), lattice centred on the origin."""
        rr, cc = np.meshgrid(np.arange(self.rows), np.arange(self.cols), indexing="ij")
        x = (cc.ravel() - (self.cols - 1) / 2) * self.pitch
        y = (rr.ravel() - (self.rows - 1) / 2) * self.pitch
        return np.column_stack([x, y])

    def focal_positions(self) -> np.ndarray:
        """Ideal lenslet foci, one focal length behind the array plane."""
        xy = self.lenslet_centers()
        return np.column_stack([xy, np.full(len(xy), self.focal_length)])


@dataclass(frozen=True)
class RelayTelescope:
    focal_length_1: float
    focal_length_2: float
    aperture: float = 50e-3

    def __post_init__(self):
        if self.focal_length_1 <= 0 or self.focal_length_2 <= 0:
            raise DomainError("relay focal lengths must be positive")

    @property
    def magnification(self) -> float:
        return self.focal_length_2 / self.focal_length_1


def beam_intensity(beam: GaussianBeam, point) -> np.ndarray:
    """TEM00 intensity (W/m^2) at ``point``, an array of shape (..., 3)."""
    p = np.asarray(point, dtype=float) - np.asarray(beam.focus_position)
    axis = np.asarray(beam.axis)
    z = p @ axis
    r2 = np.maximum(np.sum(p * p, axis=-1) - z * z, 0.0)
    w2 = beam.waist**2 * (1 + (z / beam.rayleigh_range) ** 2)
    return 2 * beam.power / (np.pi * w2) * np.exp(-2 * r2 / w2)


def numerical_aperture(array: MicrolensArray) -> float:
    return float(np.sin(np.arctan(array.lens_diameter / (2 * array.focal_length))))


def focal_spot_radius(wavelength: float, na: float) -> float:
    """Radius of the first Airy minimum for a uniformly illuminated lenslet."""
    if not 0 < na < 1:
        raise DomainError(f"numerical aperture must lie in (0, 1), got {na!r}")
    return AIRY_FACTOR * wavelength / na


def site_waist(array: MicrolensArray, wavelength: float) -> float:
    """Gaussian waist used for trap physics at each lenslet focus."""
    return AIRY_TO_GAUSSIAN * focal_spot_radius(wavelength, numerical_aperture(array))


def relay_image(telescope: RelayTelescope, source_plane_points) -> np.ndarray:
    """Map points through an ideal 4f relay.

    Transverse coordinates are inverted and scaled by the magnification;
    axial displacement from the focal plane scales with its square.
    """
    pts = np.asarray(source_plane_points, dtype=float)
    m = telescope.magnification
    out = np.empty_like(pts)
    out[..., :2] = -m * pts[..., :2] + 0.0  # no signed zeros
    if pts.shape[-1] > 2:
        out[..., 2:] = m**2 * pts[..., 2:]
    return out


def _check_paraxial(angle):
    if np.any(np.abs(angle) > MAX_PARAXIAL_ANGLE):
        raise DomainError(f"beam angle {angle!r} rad is outside the paraxial range "
                          f"(|angle| <= {MAX_PARAXIAL_ANGLE})")


def dual_beam_site_offset(array: MicrolensArray, angle_between_beams):
    """Lateral separation of the two focal lattices for tilted illumination."""
    _check_paraxial(angle_between_beams)
    return array.focal_length * np.tan(angle_between_beams)


def angle_for_offset(array: MicrolensArray, offset: float) -> float:
    angle = float(np.arctan(offset / array.focal_length))
    _check_paraxial(angle)
    return angle


def _disk_rule(radius: float, order: tuple[int, int]):
    """Tensor Gauss-Legendre nodes/weights on a disk in polar coordinates."""
    n_r, n_t = order
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    xt, wt = np.polynomial.legendre.leggauss(n_t)
    r = 0.5 * radius * (xr + 1)
    t = np.pi * (xt + 1)
    R, T = np.meshgrid(r, t, indexing="ij")
    W = np.outer(0.5 * radius * wr * r, np.pi * wt)
    return (R * np.cos(T)).ravel(), (R * np.sin(T)).ravel(), W.ravel()


def lenslet_power_share(array: MicrolensArray, beam: GaussianBeam,
                        order: tuple[int, int] = (32, 32)) -> dict[int, float]:
    """Power (W) of ``beam`` falling on each lenslet aperture.

    The array lies in the plane z = 0; keys are row-major lenslet indices.
    """
    axis = np.asarray(beam.axis)
    if not np.allclose(axis, (0.0, 0.0, 1.0)) and not np.allclose(axis, (0.0, 0.0, -1.0)):
        raise DomainError("beam axis must be normal to the array plane")
    dx, dy, w = _disk_rule(array.lens_diameter / 2, order)
    centers = array.lenslet_centers()
    shares = {}
    for i, (cx, cy) in enumerate(centers):
        pts = np.column_stack([cx + dx, cy + dy, np.zeros_like(dx)])
        shares[i] = float(np.dot(w, beam_intensity(beam, pts)))
    return shares
